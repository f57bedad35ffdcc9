"""Data generation, preprocessing, annotation and benchmarking around the model."""

from .annotate import annotate
from .bench import bench_scaling, efficiency_report, run_bench
from .config import load_run_config, parse_override
from .preprocess import DatasetSplits, chronological_split, load_dataset, preprocess, resample
from .synthetic import build_city, gen_data

__all__ = [
    "DatasetSplits",
    "annotate",
    "bench_scaling",
    "build_city",
    "chronological_split",
    "efficiency_report",
    "gen_data",
    "load_dataset",
    "load_run_config",
    "parse_override",
    "preprocess",
    "resample",
    "run_bench",
]
