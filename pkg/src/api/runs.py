"""Read-only access to the run ledger."""

from __future__ import annotations

from typing import List, Optional

from fastapi import APIRouter, Depends, FastAPI, HTTPException, Path as PathParam, Query

from app.deps import get_ledger
from src.models import RunRecord
from src.storage import RunLedger

router = APIRouter(prefix="/v1/runs", tags=["runs"])


@router.get("", response_model=List[RunRecord])
def list_runs(
    kind: Optional[str] = Query(None, description="filter by subcommand, e.g. pretrain"),
    ledger: RunLedger = Depends(get_ledger),
) -> List[RunRecord]:
    """按创建时间列出运行记录。"""

    return ledger.list_runs(kind=kind)


@router.get("/{run_id}", response_model=RunRecord)
def get_run(
    run_id: str = PathParam(..., description="运行 ID"),
    ledger: RunLedger = Depends(get_ledger),
) -> RunRecord:
    record = ledger.get_run(run_id)
    if record is None:
        raise HTTPException(status_code=404, detail="Run not found")
    return record


def register_routes(app: FastAPI) -> None:
    app.include_router(router)


__all__ = ["router", "register_routes"]
