"""Desk-scale experiments on the default synthetic city.

Deselected by default; run with ``pytest -m slow``. Each takes minutes.
"""

from pathlib import Path

import pytest

from src.harness.annotate import annotate
from src.harness.bench import bench_scaling, scaling_ratios
from src.harness.commands import evaluate
from src.harness.preprocess import load_dataset, preprocess
from src.harness.synthetic import RAW_TRAJECTORIES_FILE, gen_data
from src.models import RunConfig
from src.pretrain.checkpointing import load_encoder
from src.pretrain.trainer import pretrain_run
from tests.conftest import load_tiny_context

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def desk(tmp_path_factory):
    root = tmp_path_factory.mktemp("desk")
    config = RunConfig(data_dir=str(root / "data"), output_dir=str(root / "runs"))
    data_dir = Path(config.data_dir)
    gen_data(config.seed, config.num_traj, config.city_width, config.city_height, data_dir)
    preprocess(data_dir / RAW_TRAJECTORIES_FILE, data_dir)
    annotate(data_dir)
    dataset = load_dataset(data_dir)
    context = load_tiny_context(config)

    trained = pretrain_run(config, dataset["train"], dataset["val"], context, root / "runs" / "trained")
    untrained_config = config.model_copy(update={"epochs": 0})
    untrained = pretrain_run(untrained_config, dataset["train"], dataset["val"], context, root / "runs" / "untrained")
    return {
        "config": config,
        "dataset": dataset,
        "result": trained,
        "encoder": load_encoder(trained.checkpoint_path),
        "untrained": load_encoder(untrained.checkpoint_path),
    }


def test_pretraining_halves_the_loss_and_aligns_views(desk):
    curve = desk["result"].loss_curve
    assert curve[-1]["mean_loss"] <= 0.5 * curve[0]["mean_loss"]
    assert set(desk["result"].alignment) == {"road", "poi"}
    assert all(value >= 0.8 for value in desk["result"].alignment.values())


def test_similarity_search_beats_chance_and_the_untrained_encoder(desk):
    corpus_size = sum(len(part) for part in desk["dataset"].values())
    # filtering can leave fewer than db_size + 11 trajectories
    db_size = min(desk["config"].db_size, corpus_size - 11)
    config = desk["config"].model_copy(update={"simsearch_corpus": "all", "db_size": db_size})
    trained = evaluate(config, "simsearch", desk["encoder"], desk["dataset"]).metrics
    untrained = evaluate(config, "simsearch", desk["untrained"], desk["dataset"]).metrics
    assert trained["acc@1"] >= 10 * trained["chance_acc@1"]
    assert trained["acc@1"] > untrained["acc@1"]
    assert trained["acc@1"] <= trained["acc@5"]
    assert trained["mean_rank"] >= 1.0


@pytest.mark.parametrize("task", ["destination", "arrival_time"])
def test_frozen_regression_beats_its_baseline(desk, task):
    metrics = evaluate(desk["config"], task, desk["encoder"], desk["dataset"]).metrics
    assert metrics["mae"] < metrics["baseline_mae"]


def test_encoder_time_grows_linearly_and_attention_does_not():
    frame = bench_scaling(RunConfig())
    assert scaling_ratios(frame, "trajmamba_s").max() <= 2.6
    assert scaling_ratios(frame, "attention_s").min() >= 3.2


ABLATIONS = {"w/o mb": {"use_mb": False}, "w/o poi": {"use_poi": False}, "w/o road": {"use_road": False}}


def test_full_model_beats_most_ablations_on_destination(desk, tmp_path):
    dataset, context = desk["dataset"], load_tiny_context(desk["config"])
    variants = {"full": {}, **ABLATIONS}
    mae = {name: [] for name in variants}
    for seed in (1, 2, 3):
        for name, update in variants.items():
            config = desk["config"].model_copy(update={"seed": seed, **update})
            run_dir = tmp_path / f"{name.replace('/', '').replace(' ', '_')}_{seed}"
            result = pretrain_run(config, dataset["train"], dataset["val"], context, run_dir)
            metrics = evaluate(config, "destination", load_encoder(result.checkpoint_path), dataset).metrics
            mae[name].append(metrics["mae"])

    full = sum(mae["full"]) / 3
    wins = sum(full < sum(mae[name]) / 3 for name in ABLATIONS)
    assert wins >= 2, mae
