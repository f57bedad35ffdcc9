import json
import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.errors import ConfigurationError, DimensionError, InputError, PreprocessingError
from src.harness.preprocess import load_dataset
from src.mamba.model import ModelDims, TrajMambaModel
from src.pretrain.checkpointing import load_encoder
from src.pretrain.loss import Temperature, alignment_accuracy, info_nce, similarity_matrix
from src.pretrain.trainer import ALIGNMENT_FILE, CHECKPOINT_DIR, LOSS_FILE, pretrain_run
from src.semantics.views import ViewEncoder, pad_ids
from src.tensor.autograd import Tensor
from src.tensor.checkpoint import load_tensors, read_manifest
from src.tensor.rng import Rng
from src.trajectory.embedding import pad_batch, prepare_trajectory
from src.trajectory.scaler import fit_trajectory_scaler
from tests.conftest import check_gradients, check_parameter_gradients, load_tiny_context, make_trajectory


def test_similarity_of_one_hot_rows_is_identity():
    eye = np.eye(3)
    np.testing.assert_array_equal(similarity_matrix(Tensor(eye), Tensor(eye)).data, eye)
    with pytest.raises(DimensionError):
        similarity_matrix(Tensor(np.eye(3)), Tensor(np.eye(2)))


def test_info_nce_closed_forms():
    assert info_nce(Tensor(np.array([[4.0]])), 1.0).item() == 0.0
    assert info_nce(Tensor(np.eye(2)), 1.0).item() == pytest.approx(math.log(1 + math.exp(-1)), abs=1e-6)
    assert info_nce(Tensor(np.eye(4)), 0.05).item() < 1e-3


def test_info_nce_rejects_bad_inputs():
    with pytest.raises(InputError):
        info_nce(Tensor(np.eye(2)), 0.0)
    with pytest.raises(DimensionError):
        info_nce(Tensor(np.ones((2, 3))), 1.0)


def test_info_nce_gradients(f64):
    rng = np.random.default_rng(0)
    check_gradients(
        lambda t: info_nce(similarity_matrix(t[0], t[1]), t[2].exp()),
        [rng.normal(size=(4, 3)), rng.normal(size=(4, 3)), np.array(0.3)],
    )


def test_contrastive_loss_gradients_reach_every_parameter(f64):
    trajs = [make_trajectory(index, length=5 + 2 * index) for index in range(3)]
    scaler = fit_trajectory_scaler(trajs)
    batch = pad_batch([prepare_trajectory(traj, scaler) for traj in trajs])
    model = TrajMambaModel(
        ModelDims(embed_dim=8, inner_dim=8, state_dim=3, num_heads=2, num_layers=2, num_freqs=2, chunk_size=4), Rng(4)
    )
    rng = np.random.default_rng(6)
    view = ViewEncoder(rng.normal(size=(7, 5)), embed_dim=8, num_heads=2, rng=Rng(5))
    ids, mask = pad_ids([rng.integers(0, 7, size=length) for length in (2, 4, 3)])
    temperature = Temperature()

    def loss():
        z = model.forward_batch(batch)
        return info_nce(similarity_matrix(z, view(ids, mask)), temperature())

    params = model.parameters() + view.parameters() + temperature.parameters()
    check_parameter_gradients(loss, params, entries=3)


def test_temperature_starts_at_inverse_point_zero_seven():
    assert Temperature().value == pytest.approx(1 / 0.07)
    assert Temperature(0.0)().item() == pytest.approx(1.0)


def test_alignment_accuracy_counts_ties_as_misses():
    assert alignment_accuracy(np.eye(3), np.eye(3)) == 1.0
    assert alignment_accuracy(np.ones((3, 2)), np.ones((3, 2))) == 0.0
    swapped = np.eye(3)[[1, 0, 2]]
    assert alignment_accuracy(np.eye(3), swapped) == pytest.approx(1 / 3)


def test_pretrain_writes_its_artifacts(tiny_config, prepared_data):
    dataset = load_dataset(tiny_config.data_dir)
    out = Path(tiny_config.output_dir)
    result = pretrain_run(tiny_config, dataset["train"], dataset["val"], load_tiny_context(tiny_config), out)

    assert result.checkpoint_path == out / CHECKPOINT_DIR
    curve = pd.read_csv(out / LOSS_FILE)
    assert curve["epoch"].tolist() == [1, 2]
    assert np.isfinite(curve["mean_loss"]).all()
    alignment = json.loads((out / ALIGNMENT_FILE).read_text(encoding="utf-8"))
    assert set(alignment) == {"road", "poi"}
    assert all(0.0 <= value <= 1.0 for value in alignment.values())
    assert result.metrics["final_epoch_loss"] == pytest.approx(curve["mean_loss"].iloc[-1])

    _, metadata = load_tensors(result.checkpoint_path)
    assert metadata["epoch"] == 2
    assert metadata["config_hash"] == tiny_config.config_hash()


def test_pretrain_is_deterministic_for_a_seed(tiny_config, prepared_data):
    dataset = load_dataset(tiny_config.data_dir)
    context = load_tiny_context(tiny_config)
    runs = []
    for name in ("first", "second"):
        out = Path(tiny_config.output_dir) / name
        runs.append(pretrain_run(tiny_config, dataset["train"], dataset["val"], context, out))
    assert runs[0].loss_curve == runs[1].loss_curve
    first, _ = load_tensors(runs[0].checkpoint_path)
    second, _ = load_tensors(runs[1].checkpoint_path)
    assert list(first) == list(second)
    for name in first:
        np.testing.assert_array_equal(first[name], second[name])


def test_resume_continues_the_same_trajectory(tiny_config, prepared_data):
    dataset = load_dataset(tiny_config.data_dir)
    context = load_tiny_context(tiny_config)
    root = Path(tiny_config.output_dir)
    full = pretrain_run(tiny_config, dataset["train"], dataset["val"], context, root / "full")

    half_config = tiny_config.model_copy(update={"epochs": 1})
    half = pretrain_run(half_config, dataset["train"], dataset["val"], context, root / "half")
    resume_config = tiny_config.model_copy(update={"resume_from": str(half.checkpoint_path)})
    resumed = pretrain_run(resume_config, dataset["train"], dataset["val"], context, root / "resumed")

    assert [row["epoch"] for row in resumed.loss_curve] == [1, 2]
    for got, want in zip(resumed.loss_curve, full.loss_curve):
        assert got["mean_loss"] == pytest.approx(want["mean_loss"], rel=1e-12)
    expected, _ = load_tensors(full.checkpoint_path)
    actual, _ = load_tensors(resumed.checkpoint_path)
    for name, value in expected.items():
        np.testing.assert_allclose(actual[name], value, rtol=1e-12, atol=1e-14)


def test_unannotated_trajectories_are_reported(tiny_config, prepared_data):
    dataset = load_dataset(tiny_config.data_dir)
    context = load_tiny_context(tiny_config)
    missing = dataset["train"][0].traj_id
    del context.annotations[missing]
    with pytest.raises(PreprocessingError) as excinfo:
        pretrain_run(tiny_config, dataset["train"], dataset["val"], context, Path(tiny_config.output_dir))
    assert excinfo.value.traj_id == missing


def test_training_split_smaller_than_a_batch_is_rejected(tiny_config, prepared_data):
    dataset = load_dataset(tiny_config.data_dir)
    with pytest.raises(ConfigurationError):
        pretrain_run(
            tiny_config,
            dataset["train"][: tiny_config.batch_size - 1],
            dataset["val"],
            load_tiny_context(tiny_config),
            Path(tiny_config.output_dir),
        )


def test_single_view_pretraining(tiny_config, prepared_data):
    config = tiny_config.model_copy(update={"epochs": 1, "use_poi": False})
    dataset = load_dataset(config.data_dir)
    result = pretrain_run(config, dataset["train"], dataset["val"], load_tiny_context(config), Path(config.output_dir))
    assert set(result.alignment) == {"road"}
    assert math.isnan(result.loss_curve[0]["poi_loss"])


def test_loaded_encoder_matches_the_checkpoint(pretrained):
    tensors, _ = load_tensors(pretrained.encoder.path)
    for name, param in pretrained.encoder.model.named_parameters():
        np.testing.assert_array_equal(param.data, tensors[name])
    assert pretrained.encoder.config.seed == pretrained.config.seed
    with pytest.raises(ConfigurationError, match="checkpoint not found"):
        load_encoder(pretrained.encoder.path.parent / "nowhere")


def test_single_precision_checkpoint_keeps_scaler_bounds_in_f64(tiny_config, prepared_data):
    config = tiny_config.model_copy(update={"precision": "f32", "epochs": 1})
    dataset = load_dataset(config.data_dir)
    result = pretrain_run(config, dataset["train"], dataset["val"], load_tiny_context(config), Path(config.output_dir))

    tags = {entry["name"]: entry["dtype"] for entry in read_manifest(result.checkpoint_path)["entries"]}
    assert tags["scaler.min"] == tags["scaler.max"] == "f64"
    encoder = load_encoder(result.checkpoint_path)
    assert {tags[name] for name, _ in encoder.model.named_parameters()} == {"f32"}
    assert encoder.scaler.minimum.dtype == np.float64
