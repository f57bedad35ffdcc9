import numpy as np
import pytest

from src.errors import ConfigurationError, DimensionError, GuardError, InputError
from src.models import RunConfig
from src.tasks.metrics import cosine_similarity, distance_metrics, ranking_metrics, regression_metrics, target_rank
from src.tasks.regression import (
    TargetCodec,
    baseline_predictions,
    train_eval_regression,
    truncate_for_task,
    truncate_split,
)
from src.tasks.simsearch import (
    downsample_uniform,
    evaluate_simsearch,
    odd_even_split,
    raw_distances,
    simsearch_protocol,
)
from src.tensor.rng import Rng
from src.trajectory.scaler import fit_trajectory_scaler
from tests.conftest import START_T, make_trajectory


def test_regression_metrics_examples():
    assert regression_metrics([110.0], [100.0]) == pytest.approx({"mae": 10.0, "rmse": 10.0, "mape": 10.0})
    assert regression_metrics([3.0, 4.0], [3.0, 4.0]) == {"mae": 0.0, "rmse": 0.0, "mape": 0.0}
    assert "mape" not in regression_metrics([1.0], [0.0], with_mape=False)
    with pytest.raises(GuardError):
        regression_metrics([1.0], [0.0])
    with pytest.raises(DimensionError):
        regression_metrics([1.0, 2.0], [1.0])
    with pytest.raises(InputError):
        regression_metrics([], [])


def test_distance_metrics():
    assert distance_metrics([3.0, 4.0]) == pytest.approx({"mae": 3.5, "rmse": np.sqrt(12.5)})


def test_ranking_helpers():
    assert cosine_similarity(np.array([1.0, 0.0]), np.array([[2.0, 0.0], [0.0, 1.0], [0.0, 0.0]])).tolist() == [1.0, 0.0, 0.0]
    assert target_rank(np.array([0.5, 0.4, 0.1]), 0) == 1
    assert target_rank(np.array([0.5, 0.5, 0.1]), 0) == 2
    assert target_rank(np.zeros(4), 0) == 4
    assert target_rank(np.array([0.2, 0.5, 0.9]), 0) == 3
    metrics = ranking_metrics([1, 3, 6])
    assert metrics == pytest.approx({"acc@1": 1 / 3, "acc@5": 2 / 3, "mean_rank": 10 / 3})
    with pytest.raises(InputError):
        ranking_metrics([0])


@pytest.mark.parametrize("length, expected", [(10, 5), (7, 2), (6, None)])
def test_truncation_drops_the_last_five_points(length, expected):
    prefix = truncate_for_task(make_trajectory(length=length))
    assert (None if prefix is None else len(prefix)) == expected


def test_truncate_split_counts_skipped(caplog):
    trajs = [make_trajectory(i, length=n) for i, n in enumerate((6, 7, 12))]
    split = truncate_split(trajs, "test")
    assert len(split) == 2
    assert split.skipped == 1
    assert [traj.traj_id for traj in split.full] == [1, 2]
    assert "Skipped 1 test trajectories" in caplog.text


def test_target_codec_round_trips_and_baselines():
    trajs = [make_trajectory(i, length=10 + i, step_s=5 + i) for i in range(6)]
    split = truncate_split(trajs, "train")
    scaler = fit_trajectory_scaler(trajs)

    arrival = TargetCodec("arrival_time", scaler, split)
    raw = arrival.raw(split.full)
    np.testing.assert_allclose(arrival.decode(arrival.encode(raw)), raw)
    assert arrival.encode(raw).mean() == pytest.approx(0.0, abs=1e-12)
    baseline = baseline_predictions("arrival_time", split, split, arrival)
    np.testing.assert_allclose(baseline, raw.mean())

    destination = TargetCodec("destination", scaler, split)
    encoded = destination.encode(destination.raw(split.full))
    assert encoded.min() >= 0.0 and encoded.max() <= 1.0
    last_seen = baseline_predictions("destination", split, split, destination)
    np.testing.assert_array_equal(last_seen[0], split.prefixes[0].coords[-1])

    with pytest.raises(ConfigurationError):
        TargetCodec("speed", scaler, split)


def test_odd_even_split_of_six_points():
    traj = make_trajectory(length=6)
    query, target = odd_even_split(traj)
    np.testing.assert_array_equal(query.t, traj.t[[0, 2, 4]])
    np.testing.assert_array_equal(target.t, traj.t[[1, 3, 5]])
    with pytest.raises(InputError):
        odd_even_split(make_trajectory(length=1))


def test_downsample_keeps_endpoints_and_spacing():
    traj = make_trajectory(length=19)
    shape = downsample_uniform(traj, 10)
    np.testing.assert_array_equal(shape, traj.coords[::2])
    assert raw_distances(shape, shape[None]).tolist() == [0.0]


def _corpus(count: int = 40):
    return [make_trajectory(i, length=12) for i in range(count)]


def _identity_embed(sign: float = 1.0):
    """One-hot of the trajectory id; the query half is scaled by ``sign``."""

    def embed(trajs):
        vectors = np.zeros((len(trajs), 64))
        for row, traj in enumerate(trajs):
            is_query = (traj.t[0] - START_T) % 600 == 0
            vectors[row, traj.traj_id] = sign if is_query else 1.0
        return vectors

    return embed


def test_simsearch_with_perfect_embeddings_ranks_targets_first():
    metrics = simsearch_protocol(_corpus(), _identity_embed(), num_queries=5, db_size=10, seed=1)
    assert metrics["acc@1"] == 1.0
    assert metrics["mean_rank"] == 1.0
    assert metrics["chance_acc@1"] == pytest.approx(1 / 11)
    assert metrics["num_queries"] == 5.0


def test_simsearch_with_adversarial_embeddings_ranks_targets_last():
    metrics = simsearch_protocol(_corpus(), _identity_embed(sign=-1.0), num_queries=5, db_size=10, seed=1)
    assert metrics["acc@5"] == 0.0
    assert metrics["mean_rank"] == 11.0


def test_simsearch_gives_constant_embeddings_the_worst_rank():
    metrics = simsearch_protocol(_corpus(), lambda trajs: np.zeros((len(trajs), 16)), num_queries=5, db_size=10, seed=1)
    assert metrics["acc@1"] == 0.0
    assert metrics["mean_rank"] == 11.0

    collapsed = simsearch_protocol(_corpus(), lambda trajs: np.ones((len(trajs), 16)), num_queries=5, db_size=10, seed=1)
    assert collapsed["mean_rank"] == 11.0


def test_simsearch_is_deterministic_for_a_seed():
    def noisy(trajs):
        return np.stack([Rng(traj.traj_id, f"n{len(traj)}").normal(size=8) for traj in trajs])

    first = simsearch_protocol(_corpus(), noisy, num_queries=8, db_size=10, seed=4)
    assert first == simsearch_protocol(_corpus(), noisy, num_queries=8, db_size=10, seed=4)
    assert 1.0 <= first["mean_rank"] <= 11.0


def test_simsearch_needs_a_large_enough_corpus():
    with pytest.raises(ConfigurationError):
        simsearch_protocol(_corpus(15), _identity_embed(), num_queries=5, db_size=10, seed=1)


def _task_config(pretrained, **update) -> RunConfig:
    return pretrained.config.model_copy(update=update)


def _parameters(model):
    return {name: param.data.copy() for name, param in model.named_parameters()}


@pytest.mark.parametrize("task", ["destination", "arrival_time"])
def test_frozen_regression_leaves_the_encoder_untouched(pretrained, task):
    before = _parameters(pretrained.encoder.model)
    dataset = pretrained.dataset
    report = train_eval_regression(
        task, "frozen", pretrained.encoder, dataset["train"], dataset["val"], dataset["test"], _task_config(pretrained)
    )
    for name, value in _parameters(pretrained.encoder.model).items():
        np.testing.assert_array_equal(value, before[name])
    assert report.task == task and report.mode == "frozen"
    for key in ("mae", "rmse", "baseline_mae", "best_val_mae", "num_test"):
        assert np.isfinite(report.metrics[key])
    assert report.metrics["num_test"] > 0


def test_finetune_updates_the_encoder(pretrained):
    before = _parameters(pretrained.encoder.model)
    dataset = pretrained.dataset
    config = _task_config(pretrained, mode="finetune", head_epochs=1)
    report = train_eval_regression(
        "arrival_time", "finetune", pretrained.encoder, dataset["train"], dataset["val"], dataset["test"], config
    )
    after = _parameters(pretrained.encoder.model)
    assert any(not np.array_equal(after[name], before[name]) for name in before)
    assert report.mode == "finetune"


def test_regression_is_deterministic(pretrained):
    dataset = pretrained.dataset
    runs = [
        train_eval_regression(
            "destination", "frozen", pretrained.encoder, dataset["train"], dataset["val"], dataset["test"], pretrained.config
        ).metrics
        for _ in range(2)
    ]
    assert runs[0] == runs[1]


def test_regression_rejects_empty_splits(pretrained):
    short = [make_trajectory(i, length=5) for i in range(3)]
    with pytest.raises(ConfigurationError):
        train_eval_regression("destination", "frozen", pretrained.encoder, short, short, short, pretrained.config)


def test_simsearch_report_from_an_encoder(pretrained):
    dataset = pretrained.dataset
    corpus = dataset["train"] + dataset["val"] + dataset["test"]
    report = evaluate_simsearch(pretrained.encoder, corpus, pretrained.config)
    assert report.task == "simsearch"
    assert 0.0 <= report.metrics["acc@1"] <= report.metrics["acc@5"] <= 1.0
    assert report.metrics["chance_acc@1"] == pytest.approx(1 / (pretrained.config.db_size + 1))
