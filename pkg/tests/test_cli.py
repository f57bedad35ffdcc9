import json
from pathlib import Path

import pandas as pd
import pytest

from app.config import CHECKPOINT_ENV, DB_URL_ENV, OUTPUT_DIR_ENV
from src.cli import build_parser, run
from src.models import RunStatus
from src.pretrain.trainer import CHECKPOINT_DIR
from src.storage import RunLedger, default_ledger_url
from src.tensor.checkpoint import load_tensors


@pytest.fixture(autouse=True)
def _clean_environment(monkeypatch):
    for name in (DB_URL_ENV, CHECKPOINT_ENV, OUTPUT_DIR_ENV):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def config_file(tiny_config, tmp_path) -> Path:
    path = tmp_path / "config.json"
    path.write_text(tiny_config.model_dump_json(), encoding="utf-8")
    return path


def test_help_exits_cleanly(capsys):
    assert run(["--help"]) == 0
    assert "pretrain" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["train"],
        ["eval"],
        ["eval", "--task", "speed"],
        ["embed", "--split", "everything"],
    ],
)
def test_usage_errors_exit_with_one(argv):
    assert run(argv) == 1


def test_bad_override_exits_with_one(config_file):
    assert run(["gen-data", "--config", str(config_file), "--set", "epochs"]) == 1


def test_invalid_config_exits_with_two(config_file):
    assert run(["gen-data", "--config", str(config_file), "--set", "batch_size=1"]) == 2
    assert run(["gen-data", "--config", str(config_file.parent / "missing.json")]) == 2


def test_eval_without_a_checkpoint_names_the_path(config_file, tiny_config, caplog):
    assert run(["eval", "--task", "destination", "--config", str(config_file)]) == 2
    assert str(Path(tiny_config.output_dir) / CHECKPOINT_DIR) in caplog.text

    ledger = RunLedger(default_ledger_url(tiny_config.output_dir))
    [record] = ledger.list_runs(kind="eval")
    assert record.status == RunStatus.FAILED
    assert "checkpoint not found" in record.detail


def test_parser_accepts_repeated_overrides():
    args = build_parser().parse_args(["pretrain", "--set", "epochs=1", "--set", "seed=4", "--verbose"])
    assert args.overrides == ["epochs=1", "seed=4"]
    assert args.verbose


def test_pipeline_end_to_end(config_file, tiny_config):
    common = ["--config", str(config_file), "--set", "epochs=1"]
    for command in ("gen-data", "preprocess", "annotate", "pretrain"):
        assert run([command, *common]) == 0, command
    assert run(["embed", *common, "--split", "test"]) == 0
    assert run(["eval", *common, "--task", "destination"]) == 0
    assert run(["eval", *common, "--task", "destination", "--set", "mode=finetune", "--set", "head_epochs=1"]) == 0
    assert run(["eval", *common, "--task", "simsearch", "--set", "simsearch_corpus=all"]) == 0
    assert run(["bench", *common]) == 0

    output = Path(tiny_config.output_dir)
    embeddings, metadata = load_tensors(output / "embeddings")
    assert metadata["split"] == "test"
    assert all(vector.shape == (tiny_config.embed_dim,) for vector in embeddings.values())

    reports = pd.read_csv(output / "reports" / "destination.csv")
    assert reports["mode"].tolist() == ["frozen", "finetune"]
    simsearch = json.loads((output / "reports" / "simsearch_frozen.json").read_text(encoding="utf-8"))
    assert 0.0 <= simsearch["metrics"]["acc@1"] <= 1.0
    assert (output / "bench_scaling.csv").exists()
    efficiency = json.loads((output / "efficiency.json").read_text(encoding="utf-8"))
    assert "train_s_per_epoch" in efficiency

    ledger = RunLedger(default_ledger_url(output))
    runs = ledger.list_runs()
    assert len(runs) == 9
    assert all(record.status == RunStatus.COMPLETED for record in runs)
    [pretrain] = ledger.list_runs(kind="pretrain")
    assert {artifact.name for artifact in pretrain.artifacts} == {"checkpoint", "loss_curve", "alignment"}
    assert pretrain.config["epochs"] == 1
