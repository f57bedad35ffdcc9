"""Shared fixtures: f64 precision, small trajectories and a tiny prepared dataset."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List

import numpy as np
import pytest

from src.harness.annotate import annotate
from src.harness.preprocess import load_dataset, preprocess
from src.harness.synthetic import RAW_TRAJECTORIES_FILE, gen_data
from src.models import RunConfig
from src.pretrain.checkpointing import LoadedEncoder, load_encoder
from src.pretrain.trainer import pretrain_run
from src.semantics.context import SemanticContext, load_context
from src.semantics.text import HashTextProvider
from src.tensor.autograd import Tensor, precision
from src.trajectory.types import Trajectory

BASE_LNG = 104.05
BASE_LAT = 30.66
START_T = 1538388000  # 2018-10-01T10:00:00Z, a Monday


@pytest.fixture
def f64():
    with precision("f64"):
        yield


def make_trajectory(traj_id: int = 0, length: int = 10, step_s: int = 10, rng: np.random.Generator = None) -> Trajectory:
    """A gently curving track heading north-east at roughly 10 m/s."""

    rng = rng or np.random.default_rng(traj_id)
    steps = rng.normal(0.0, 1e-5, size=(length, 2)) + np.array([8e-5, 6e-5])
    lng = BASE_LNG + np.cumsum(steps[:, 0])
    lat = BASE_LAT + np.cumsum(steps[:, 1])
    t = START_T + traj_id * 600 + step_s * np.arange(length)
    return Trajectory(traj_id, lng, lat, t)


@pytest.fixture
def trajectory_factory() -> Callable[..., Trajectory]:
    return make_trajectory


def numeric_gradient(fn: Callable[[], float], array: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar ``fn`` w.r.t. ``array`` (modified in place)."""

    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    grad_flat = grad.reshape(-1)
    for index in range(flat.size):
        original = flat[index]
        flat[index] = original + eps
        plus = fn()
        flat[index] = original - eps
        minus = fn()
        flat[index] = original
        grad_flat[index] = (plus - minus) / (2 * eps)
    return grad


def check_gradients(build: Callable[[List[Tensor]], Tensor], inputs: List[np.ndarray], rtol: float = 1e-4) -> None:
    """Compare autograd gradients of ``sum(build(inputs) * weights)`` with finite differences."""

    tensors = [Tensor(array, requires_grad=True, dtype=np.float64) for array in inputs]
    output = build(tensors)
    weights = np.random.default_rng(99).normal(size=output.shape)
    (output * weights).sum().backward()

    for tensor in tensors:
        def value() -> float:
            return float((build(tensors).data * weights).sum())

        expected = numeric_gradient(value, tensor.data)
        actual = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
        scale = max(np.abs(expected).max(), np.abs(actual).max(), 1e-8)
        assert np.abs(actual - expected).max() / scale <= rtol


def check_parameter_gradients(
    loss: Callable[[], Tensor],
    params: List[Tensor],
    rtol: float = 1e-4,
    atol: float = 1e-8,
    entries: int = 0,
    seed: int = 0,
) -> None:
    """Compare the gradient of a scalar ``loss()`` w.r.t. each parameter with finite differences.

    ``entries > 0`` checks that many randomly chosen elements per parameter instead of all.
    """

    for param in params:
        param.data = np.array(param.data, dtype=np.float64, order="C")
        param.grad = None
    loss().backward()
    pick = np.random.default_rng(seed)

    for param in params:
        flat = param.data.reshape(-1)
        actual = (param.grad if param.grad is not None else np.zeros_like(param.data)).reshape(-1)
        chosen = np.arange(flat.size)
        if entries and flat.size > entries:
            chosen = pick.choice(flat.size, size=entries, replace=False)
        expected = np.empty(len(chosen))
        for slot, index in enumerate(chosen):
            original = flat[index]
            flat[index] = original + 1e-6
            plus = loss().item()
            flat[index] = original - 1e-6
            minus = loss().item()
            flat[index] = original
            expected[slot] = (plus - minus) / 2e-6
        scale = max(np.abs(expected).max(), np.abs(actual[chosen]).max(), 1e-8)
        assert np.abs(actual[chosen] - expected).max() <= rtol * scale + atol, getattr(param, "name", "")


@pytest.fixture
def tiny_config(tmp_path: Path) -> RunConfig:
    """A pipeline-sized config whose runs finish in seconds."""

    return RunConfig(
        seed=3,
        precision="f64",
        data_dir=str(tmp_path / "data"),
        output_dir=str(tmp_path / "runs"),
        num_traj=120,
        city_width=6,
        city_height=6,
        embed_dim=16,
        inner_dim=16,
        state_dim=4,
        num_heads=2,
        num_layers=1,
        num_freqs=4,
        chunk_size=8,
        view_heads=2,
        text_dim=8,
        batch_size=8,
        epochs=2,
        head_epochs=3,
        task_batch_size=16,
        num_queries=5,
        db_size=10,
        bench_lengths=[8, 16],
        bench_reps=1,
        bench_embed_dim=16,
        bench_inner_dim=16,
        bench_state_dim=4,
        bench_num_heads=2,
        bench_num_layers=1,
    )


@pytest.fixture
def prepared_data(tiny_config: RunConfig) -> Dict[str, Path]:
    """gen-data, preprocess and annotate for ``tiny_config``."""

    data_dir = Path(tiny_config.data_dir)
    paths = gen_data(
        tiny_config.seed,
        tiny_config.num_traj,
        tiny_config.city_width,
        tiny_config.city_height,
        data_dir,
    )
    paths.update(preprocess(data_dir / RAW_TRAJECTORIES_FILE, data_dir))
    paths["annotations"] = annotate(data_dir)
    return paths


@dataclass
class Pretrained:
    config: RunConfig
    dataset: Dict[str, List[Trajectory]]
    encoder: LoadedEncoder


def load_tiny_context(config: RunConfig) -> SemanticContext:
    return load_context(config.data_dir, HashTextProvider(config.text_dim))


@pytest.fixture
def pretrained(tiny_config: RunConfig, prepared_data: Dict[str, Path]) -> Pretrained:
    """A one-epoch checkpoint over the tiny dataset, loaded back as an encoder."""

    config = tiny_config.model_copy(update={"epochs": 1})
    dataset = load_dataset(config.data_dir)
    result = pretrain_run(config, dataset["train"], dataset["val"], load_tiny_context(config), Path(config.output_dir))
    return Pretrained(config, dataset, load_encoder(result.checkpoint_path))
