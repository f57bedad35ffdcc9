"""Command-line entry point: ``gen-data``, ``preprocess``, ``annotate``, ``pretrain``,
``embed``, ``eval``, ``bench`` and ``serve``.

Exit codes: 0 on success, 1 for usage errors, 2 for data or configuration errors.
"""

from __future__ import annotations

import argparse
import logging
from typing import Callable, Dict, List, Optional, Sequence

from sqlalchemy.exc import SQLAlchemyError

from app.config import Settings, get_settings
from app.logging import configure_logging
from src.errors import TrajMambaError, UsageError
from src.harness import commands
from src.harness.commands import CommandResult
from src.harness.config import load_run_config
from src.models import RunConfig, RunStatus
from src.storage import RunLedger, default_ledger_url

logger = logging.getLogger(__name__)

PROG = "trajmamba"
DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8000


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so the caller owns the exit code."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage()
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="RunConfig JSON file")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key; VALUE is parsed as JSON, else taken as a string",
    )
    common.add_argument("--verbose", action="store_true", help="log at DEBUG level")

    parser = _Parser(prog=PROG, description="Trajectory representation learning toolkit.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    sub.add_parser("gen-data", parents=[common], help="generate the synthetic city and raw trajectories")
    preprocess = sub.add_parser("preprocess", parents=[common], help="resample, filter and split trajectories")
    preprocess.add_argument("--input", metavar="PATH", help="raw trajectory CSV (default: <data_dir>/trajectories_raw.csv)")
    sub.add_parser("annotate", parents=[common], help="map-match trajectories and attach nearest POIs")
    sub.add_parser("pretrain", parents=[common], help="contrastive pre-training against road and POI views")
    embed = sub.add_parser("embed", parents=[common], help="write one embedding per trajectory")
    embed.add_argument("--split", choices=("train", "val", "test", "all"), default="all")
    embed.add_argument("--out", metavar="DIR", help="output directory (default: <output_dir>/embeddings)")
    evaluate = sub.add_parser("eval", parents=[common], help="run a downstream evaluation")
    evaluate.add_argument("--task", required=True, choices=commands.EVAL_TASKS)
    sub.add_parser("bench", parents=[common], help="encode-time scaling and efficiency report")
    serve = sub.add_parser("serve", parents=[common], help="serve the embedding API")
    serve.add_argument("--host", default=DEFAULT_HOST)
    serve.add_argument("--port", type=int, default=DEFAULT_PORT)
    return parser


def _open_ledger(config: RunConfig, settings: Settings) -> Optional[RunLedger]:
    try:
        return RunLedger(settings.database_url or default_ledger_url(config.output_dir))
    except SQLAlchemyError as exc:
        logger.warning("Run ledger unavailable, continuing without it: %s", exc)
        return None


def _ledger_call(action: str, call: Callable[[], object]) -> Optional[object]:
    try:
        return call()
    except (SQLAlchemyError, KeyError) as exc:
        logger.warning("Could not %s in the run ledger: %s", action, exc)
        return None


def _last_epoch_seconds(ledger: Optional[RunLedger]) -> Optional[float]:
    if ledger is None:
        return None
    runs = _ledger_call("list pretrain runs", lambda: ledger.list_runs(kind="pretrain")) or []
    finished = [run for run in runs if run.status == RunStatus.COMPLETED and "seconds_per_epoch" in run.metrics]
    return finished[-1].metrics["seconds_per_epoch"] if finished else None


def _serve(config: RunConfig, host: str, port: int) -> CommandResult:
    import uvicorn

    from app.main import create_app

    uvicorn.run(create_app(), host=host, port=port)
    return CommandResult()


def _dispatch(args: argparse.Namespace, config: RunConfig, settings: Settings, ledger: Optional[RunLedger]) -> CommandResult:
    handlers: Dict[str, Callable[[], CommandResult]] = {
        "gen-data": lambda: commands.run_gen_data(config),
        "preprocess": lambda: commands.run_preprocess(config, args.input),
        "annotate": lambda: commands.run_annotate(config),
        "pretrain": lambda: commands.run_pretrain(config, settings),
        "embed": lambda: commands.run_embed(config, args.split, args.out),
        "eval": lambda: commands.run_eval(config, args.task),
        "bench": lambda: commands.run_bench_command(config, _last_epoch_seconds(ledger)),
        "serve": lambda: _serve(config, args.host, args.port),
    }
    return handlers[args.command]()


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, run one subcommand under the ledger and return the exit code."""

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        configure_logging()
        logger.error("%s", exc)
        return exc.exit_code
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    configure_logging(logging.DEBUG if args.verbose else logging.INFO)
    try:
        config = load_run_config(args.config, args.overrides)
    except TrajMambaError as exc:
        logger.error("%s", exc)
        return exc.exit_code

    settings = get_settings()
    ledger = _open_ledger(config, settings)
    record = _ledger_call("start the run", lambda: ledger.start_run(args.command, config)) if ledger else None
    try:
        result = _dispatch(args, config, settings, ledger)
    except TrajMambaError as exc:
        logger.error("%s failed: %s", args.command, exc)
        if record is not None:
            _ledger_call("record the failure", lambda: ledger.fail_run(record.id, str(exc)))
        return exc.exit_code
    except KeyboardInterrupt:
        if record is not None:
            _ledger_call("record the interruption", lambda: ledger.fail_run(record.id, "interrupted"))
        raise

    if record is not None:
        for name, kind, path in result.artifacts:
            _ledger_call("register an artifact", lambda: ledger.add_artifact(record.id, name, kind, path))
        _ledger_call("complete the run", lambda: ledger.complete_run(record.id, result.metrics))
    return 0


def main(argv: Optional[List[str]] = None) -> None:
    raise SystemExit(run(argv))


__all__ = ["build_parser", "main", "run"]
