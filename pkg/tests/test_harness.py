import json
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from src.errors import ConfigurationError, ParseError, UsageError
from src.harness.bench import (
    BENCH_COLUMNS,
    AttentionBaseline,
    bench_scaling,
    efficiency_report,
    random_batch,
    scaling_ratios,
)
from src.harness.config import load_run_config, parse_override
from src.harness.preprocess import (
    DatasetSplits,
    chronological_split,
    keep_length,
    load_dataset,
    load_splits,
    resample,
)
from src.harness.synthetic import RAW_TRAJECTORIES_FILE, gen_data
from src.mamba.model import ModelDims, TrajMambaModel
from src.tensor.autograd import Tensor
from src.tensor.rng import Rng
from src.trajectory.io import read_trajectories_csv, write_trajectories_csv
from src.trajectory.types import Trajectory
from tests.conftest import START_T, make_trajectory

HEADER = "traj_id,seq,lng,lat,timestamp\n"


def _write(tmp_path: Path, body: str, header: str = HEADER) -> Path:
    path = tmp_path / "trajectories.csv"
    path.write_text(header + body, encoding="utf-8")
    return path


def test_trajectory_csv_round_trip(tmp_path):
    trajs = [make_trajectory(i, length=4 + i) for i in range(3)]
    restored = read_trajectories_csv(write_trajectories_csv(tmp_path / "t.csv", trajs))
    assert [traj.traj_id for traj in restored] == [0, 1, 2]
    for got, want in zip(restored, trajs):
        np.testing.assert_array_equal(got.t, want.t)
        np.testing.assert_allclose(got.coords, want.coords, atol=1e-6)


@pytest.mark.parametrize(
    "header, body, line",
    [
        ("id,seq,lng,lat,timestamp\n", "0,0,104.0,30.0,10\n", 1),
        (HEADER, "0,0,104.0,30.0,10\n0,1,north,30.0,20\n", 3),
        (HEADER, "0,0,104.0,30.0,10\n0,1,104.0,95.0,20\n", 3),
        (HEADER, "1,0,104.0,30.0,10\n0,0,104.0,30.0,20\n", 3),
        (HEADER, "0,0,104.0,30.0,10\n0,1,104.0,30.0,10\n", 3),
        (HEADER, "0,0,104.0,30.0,10\n0,1,104.0,30.0,20\n0,1,104.0,30.0,30\n", 4),
    ],
)
def test_trajectory_csv_errors_carry_line_numbers(tmp_path, header, body, line):
    with pytest.raises(ParseError) as excinfo:
        read_trajectories_csv(_write(tmp_path, body, header))
    assert excinfo.value.line == line


def test_missing_trajectory_file_is_a_configuration_error(tmp_path):
    with pytest.raises(ConfigurationError):
        read_trajectories_csv(tmp_path / "absent.csv")
    assert read_trajectories_csv(_write(tmp_path, "")) == []


@pytest.mark.parametrize("length, kept_points, kept", [(15, 5, True), (12, 4, False), (400, 134, False), (360, 120, True)])
def test_resample_then_length_filter(length, kept_points, kept):
    traj = make_trajectory(length=length)
    resampled = resample(traj)
    assert len(resampled) == kept_points
    np.testing.assert_array_equal(resampled.t, traj.t[::3])
    assert keep_length(resampled) is kept


def _departing(traj_id: int, departure: int) -> Trajectory:
    return Trajectory(traj_id, [104.0, 104.001], [30.0, 30.0], [departure, departure + 30])


def test_chronological_split_orders_by_departure():
    # ids run backwards in time, so the earliest departures have the largest ids
    trajs = [_departing(i, START_T - 60 * i) for i in range(10)]
    splits = chronological_split(trajs)
    assert splits.train == [9, 8, 7, 6, 5, 4, 3, 2]
    assert splits.val == [1]
    assert splits.test == [0]


def test_chronological_split_sizes_use_floor():
    splits = chronological_split([_departing(i, START_T + i) for i in range(25)])
    assert (len(splits.train), len(splits.val), len(splits.test)) == (20, 2, 3)


def test_chronological_split_breaks_departure_ties_by_id():
    splits = chronological_split([_departing(i, START_T) for i in (4, 2, 3, 1, 0, 9, 8, 7, 6, 5)])
    assert splits.train == list(range(8))


def test_splits_must_be_disjoint(tmp_path):
    with pytest.raises(ValidationError):
        DatasetSplits(train=[1, 2], val=[2], test=[3])
    with pytest.raises(ConfigurationError):
        DatasetSplits(train=[1], val=[], test=[]).select([make_trajectory(0)])
    with pytest.raises(ConfigurationError):
        load_splits(tmp_path / "splits.json")


def test_gen_data_is_deterministic(tmp_path):
    first = gen_data(5, 12, 4, 4, tmp_path / "a")
    second = gen_data(5, 12, 4, 4, tmp_path / "b")
    for name, path in first.items():
        assert path.read_bytes() == second[name].read_bytes()
    other = gen_data(6, 12, 4, 4, tmp_path / "c")
    assert other["trajectories"].read_bytes() != first["trajectories"].read_bytes()


def test_generated_trajectories_are_ordered_and_sampled_every_few_seconds(tmp_path):
    paths = gen_data(2, 10, 4, 4, tmp_path)
    assert paths["trajectories"].name == RAW_TRAJECTORIES_FILE
    trajs = read_trajectories_csv(paths["trajectories"])
    assert [traj.traj_id for traj in trajs] == list(range(10))
    for traj in trajs:
        gaps = np.diff(traj.t)
        assert gaps.min() >= 2 and gaps.max() <= 4


def test_preprocessed_dataset_matches_its_split_file(tiny_config, prepared_data):
    dataset = load_dataset(tiny_config.data_dir)
    splits = load_splits(prepared_data["splits"])
    total = len(splits.train) + len(splits.val) + len(splits.test)
    assert len(splits.train) == total * 8 // 10
    assert len(splits.val) == total // 10
    assert [traj.traj_id for traj in dataset["test"]] == splits.test
    assert all(5 <= len(traj) <= 120 for part in dataset.values() for traj in part)
    latest_train = max(traj.departure_time for traj in dataset["train"])
    assert all(traj.departure_time >= latest_train for traj in dataset["val"])


def test_parse_override():
    assert parse_override("epochs=3") == ("epochs", 3)
    assert parse_override("use_poi=false") == ("use_poi", False)
    assert parse_override("bench_lengths=[8,16]") == ("bench_lengths", [8, 16])
    assert parse_override("text_provider=hash") == ("text_provider", "hash")
    for bad in ("epochs", "=3"):
        with pytest.raises(UsageError):
            parse_override(bad)


def test_load_run_config_merges_file_and_overrides(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"epochs": 4, "seed": 11}), encoding="utf-8")
    config = load_run_config(path, ["epochs=2", "use_poi=false"])
    assert (config.epochs, config.seed, config.use_poi) == (2, 11, False)
    assert load_run_config().seed == 7


@pytest.mark.parametrize(
    "content, overrides",
    [
        ('{"epochs": ', []),
        ("[1, 2]", []),
        ("{}", ["epoch=3"]),
        ("{}", ["batch_size=1"]),
        ("{}", ["use_road=false", "use_poi=false"]),
        ("{}", ["inner_dim=10", "num_heads=4"]),
    ],
)
def test_load_run_config_rejects_bad_documents(tmp_path, content, overrides):
    path = tmp_path / "config.json"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_run_config(path, overrides)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigurationError, match="config file not found"):
        load_run_config(tmp_path / "nope.json")


def test_config_hash_ignores_key_order(tmp_path):
    forward, backward = tmp_path / "f.json", tmp_path / "b.json"
    forward.write_text('{"seed": 1, "epochs": 2}', encoding="utf-8")
    backward.write_text('{"epochs": 2, "seed": 1}', encoding="utf-8")
    assert load_run_config(forward).config_hash() == load_run_config(backward).config_hash()
    assert load_run_config(forward).config_hash() != load_run_config(forward, ["seed=2"]).config_hash()


def test_attention_baseline_keeps_shape(f64):
    baseline = AttentionBaseline(8, 2, Rng(0))
    x = Tensor(np.random.default_rng(0).normal(size=(1, 6, 8)))
    assert baseline(x).shape == (1, 6, 8)
    assert len(list(baseline.named_parameters())) > 0


def test_random_batch_is_a_single_full_sequence():
    batch = random_batch(9, Rng(3))
    assert batch.coords.shape == (1, 9, 2)
    assert batch.mask.all()
    assert batch.temporal[0, 0, 3] == 0.0


def test_bench_scaling_rows(tiny_config):
    frame = bench_scaling(tiny_config)
    assert list(frame.columns) == BENCH_COLUMNS
    assert frame["n"].tolist() == [8, 16]
    assert (frame[["trajmamba_s", "attention_s"]] > 0).all().all()
    assert scaling_ratios(frame, "n").tolist() == [2.0]


def test_efficiency_report_figures(f64):
    dims = ModelDims(embed_dim=8, inner_dim=8, state_dim=4, num_heads=2, num_layers=1, num_freqs=3, chunk_size=4)
    model = TrajMambaModel(dims, Rng(1))
    report = efficiency_report(model, [make_trajectory(i, length=8) for i in range(3)], train_s_per_epoch=1.5)
    assert report["num_parameters"] == model.num_parameters()
    assert report["model_size_mb"] == pytest.approx(model.num_parameters() * 4 / 1e6)
    assert report["embed_ms_per_traj"] > 0
    assert report["train_s_per_epoch"] == 1.5
    assert "embed_ms_per_traj" not in efficiency_report(model, [])
