"""Run ledger: every CLI invocation and the files it produced, in SQLAlchemy Core tables."""

from __future__ import annotations

import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Union
from uuid import uuid4

from sqlalchemy import (
    Column,
    DateTime,
    ForeignKey,
    MetaData,
    String,
    Table,
    Text,
    create_engine,
    select,
)
from sqlalchemy.engine import Connection, Engine, Row

from src.models import ArtifactRecord, RunConfig, RunRecord, RunStatus

logger = logging.getLogger(__name__)

LEDGER_FILE = "ledger.db"

metadata = MetaData()


runs_table = Table(
    "runs",
    metadata,
    Column("id", String, primary_key=True),
    Column("kind", String, nullable=False),
    Column("status", String, nullable=False),
    Column("config_hash", String, nullable=False),
    Column("config", Text, nullable=False, default="{}"),
    Column("metrics", Text, nullable=False, default="{}"),
    Column("detail", Text, nullable=True),
    Column("created_at", DateTime, nullable=False),
    Column("updated_at", DateTime, nullable=False),
    Column("completed_at", DateTime, nullable=True),
)


artifacts_table = Table(
    "artifacts",
    metadata,
    Column("id", String, primary_key=True),
    Column("run_id", String, ForeignKey("runs.id"), nullable=False, index=True),
    Column("name", String, nullable=False),
    Column("type", String, nullable=False),
    Column("path", Text, nullable=False),
    Column("created_at", DateTime, nullable=False),
)


def _serialize(payload: Optional[Dict[str, Any]]) -> str:
    """将字典序列化为 JSON 文本，便于保存在文本列中。"""

    return json.dumps(payload or {}, sort_keys=True)


def _deserialize(raw: Optional[str]) -> Dict[str, Any]:
    """从 JSON 文本还原字典，缺省或损坏时返回空字典。"""

    if not raw:
        return {}
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return {}


def _ensure_utc(dt: Optional[datetime]) -> Optional[datetime]:
    """SQLite 不保存时区，读取时统一补齐为 UTC。"""

    if dt is None:
        return None
    if dt.tzinfo is None:
        return dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def default_ledger_url(output_dir: Union[str, Path]) -> str:
    path = Path(output_dir).resolve() / LEDGER_FILE
    return f"sqlite+pysqlite:///{path}"


class RunLedger:
    """基于 SQLAlchemy Core 的运行记录存储。"""

    def __init__(self, database_url: str) -> None:
        """建立数据库连接并确保表结构存在。"""

        self._database_url = database_url
        if database_url.startswith("sqlite") and ":memory:" not in database_url:
            Path(database_url.split("///", 1)[-1]).parent.mkdir(parents=True, exist_ok=True)
        self._engine: Engine = create_engine(database_url, future=True)
        metadata.create_all(self._engine)

    @property
    def database_url(self) -> str:
        return self._database_url

    # ------------------------------------------------------------------
    # Runs
    # ------------------------------------------------------------------
    def start_run(self, kind: str, config: Optional[RunConfig] = None) -> RunRecord:
        """登记一次新的运行，状态为 running。"""

        run_id = str(uuid4())
        timestamp = datetime.now(timezone.utc)
        with self._engine.begin() as conn:
            conn.execute(
                runs_table.insert().values(
                    id=run_id,
                    kind=kind,
                    status=RunStatus.RUNNING.value,
                    config_hash=config.config_hash() if config else "",
                    config=_serialize(config.model_dump(mode="json") if config else None),
                    metrics="{}",
                    detail=None,
                    created_at=timestamp,
                    updated_at=timestamp,
                    completed_at=None,
                )
            )
        return self._require(run_id)

    def complete_run(self, run_id: str, metrics: Optional[Dict[str, float]] = None) -> RunRecord:
        """标记运行完成并写入指标。"""

        return self._finish(run_id, RunStatus.COMPLETED, metrics=metrics)

    def fail_run(self, run_id: str, detail: str) -> RunRecord:
        """标记运行失败，保留错误描述。"""

        return self._finish(run_id, RunStatus.FAILED, detail=detail)

    def _finish(
        self,
        run_id: str,
        status: RunStatus,
        metrics: Optional[Dict[str, float]] = None,
        detail: Optional[str] = None,
    ) -> RunRecord:
        timestamp = datetime.now(timezone.utc)
        values: Dict[str, Any] = {
            "status": status.value,
            "updated_at": timestamp,
            "completed_at": timestamp,
            "detail": detail,
        }
        if metrics is not None:
            values["metrics"] = _serialize({key: float(value) for key, value in metrics.items()})
        with self._engine.begin() as conn:
            result = conn.execute(runs_table.update().where(runs_table.c.id == run_id).values(**values))
            if result.rowcount == 0:
                raise KeyError(run_id)
        return self._require(run_id)

    def list_runs(self, kind: Optional[str] = None) -> List[RunRecord]:
        """按创建时间列出运行记录。"""

        query = select(runs_table).order_by(runs_table.c.created_at)
        if kind is not None:
            query = query.where(runs_table.c.kind == kind)
        with self._engine.connect() as conn:
            return [self._row_to_run(conn, row) for row in conn.execute(query)]

    def get_run(self, run_id: str) -> Optional[RunRecord]:
        with self._engine.connect() as conn:
            row = conn.execute(select(runs_table).where(runs_table.c.id == run_id)).one_or_none()
            if row is None:
                return None
            return self._row_to_run(conn, row)

    def _require(self, run_id: str) -> RunRecord:
        record = self.get_run(run_id)
        if record is None:
            raise KeyError(run_id)
        return record

    # ------------------------------------------------------------------
    # Artifacts
    # ------------------------------------------------------------------
    def add_artifact(self, run_id: str, name: str, type: str, path: Union[str, Path]) -> ArtifactRecord:
        """为运行登记一个输出文件。"""

        artifact_id = str(uuid4())
        timestamp = datetime.now(timezone.utc)
        with self._engine.begin() as conn:
            if conn.execute(select(runs_table.c.id).where(runs_table.c.id == run_id)).one_or_none() is None:
                raise KeyError(run_id)
            conn.execute(
                artifacts_table.insert().values(
                    id=artifact_id,
                    run_id=run_id,
                    name=name,
                    type=type,
                    path=str(path),
                    created_at=timestamp,
                )
            )
        return ArtifactRecord(
            id=artifact_id, run_id=run_id, name=name, type=type, path=str(path), created_at=timestamp
        )

    def _artifacts(self, conn: Connection, run_id: str) -> List[ArtifactRecord]:
        rows = conn.execute(
            select(artifacts_table)
            .where(artifacts_table.c.run_id == run_id)
            .order_by(artifacts_table.c.created_at)
        )
        return [
            ArtifactRecord(
                id=row.id,
                run_id=row.run_id,
                name=row.name,
                type=row.type,
                path=row.path,
                created_at=_ensure_utc(row.created_at),
            )
            for row in rows
        ]

    def _row_to_run(self, conn: Connection, row: Row) -> RunRecord:
        return RunRecord(
            id=row.id,
            kind=row.kind,
            status=RunStatus(row.status),
            config_hash=row.config_hash,
            config=_deserialize(row.config),
            metrics=_deserialize(row.metrics),
            detail=row.detail,
            created_at=_ensure_utc(row.created_at),
            updated_at=_ensure_utc(row.updated_at),
            completed_at=_ensure_utc(row.completed_at),
            artifacts=self._artifacts(conn, row.id),
        )


__all__ = ["LEDGER_FILE", "RunLedger", "artifacts_table", "default_ledger_url", "runs_table"]
