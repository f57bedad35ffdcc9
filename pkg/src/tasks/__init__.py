"""Downstream evaluation: destination, arrival time and similar-trajectory search."""

from .heads import OUTPUT_DIMS, TaskHead
from .metrics import cosine_similarity, distance_metrics, ranking_metrics, regression_metrics, target_rank
from .regression import train_eval_regression, truncate_for_task
from .simsearch import downsample_uniform, evaluate_simsearch, odd_even_split, simsearch_protocol

__all__ = [
    "OUTPUT_DIMS",
    "TaskHead",
    "cosine_similarity",
    "distance_metrics",
    "downsample_uniform",
    "evaluate_simsearch",
    "odd_even_split",
    "ranking_metrics",
    "regression_metrics",
    "simsearch_protocol",
    "target_rank",
    "train_eval_regression",
    "truncate_for_task",
]
