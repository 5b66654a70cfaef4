"""HTTP facade for interactive synthesis: submit, poll, preview, stop.

One enumeration thread per task; candidate lists are append-only so polling
with an `after` cursor is idempotent.  The catalog, value index, and guidance
model are shared read-only across tasks.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .ast import PartialQuery, render_sql
from .catalog import SchemaCatalog, ValueIndex, autocomplete, build_value_index, load_catalog
from .database import Database, EngineError
from .guidance import GuidanceModel, LexicalConfig, Literal, lexical_model
from .search import Candidate, EnumConfig, enumerate_queries
from .tsq import EMPTY_TSQ, TsqError, parse_tsq


class LiteralIn(BaseModel):
    type: str
    value: str | int | float


class TaskIn(BaseModel):
    nlq: str
    literals: list[LiteralIn] = []
    tsq: dict | None = None


@dataclass
class TaskRecord:
    id: str
    state: str = "running"              # running | done | stopped | timeout
    candidates: list[Candidate] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    stop_event: threading.Event = field(default_factory=threading.Event)
    error: str | None = None

    def snapshot(self, after: int) -> dict:
        with self.lock:
            items = [c.to_record() for c in self.candidates if c.rank > after]
            return {"task_id": self.id, "state": self.state,
                    "candidates": items, "error": self.error}


class SynthesisService:
    """Shared engine state plus the per-task registry."""

    def __init__(self, db_path: str, config: EnumConfig | None = None,
                 model: GuidanceModel | None = None, max_tasks: int = 16):
        self.db_path = db_path
        bootstrap = Database.open(db_path)
        try:
            self.catalog: SchemaCatalog = load_catalog(bootstrap)
            self.index: ValueIndex = build_value_index(self.catalog, bootstrap)
        finally:
            bootstrap.close()
        self.config = config or EnumConfig(timeout=60.0, max_candidates=200)
        self.model = model or lexical_model(LexicalConfig(value_index=self.index))
        self.max_tasks = max_tasks
        self.tasks: dict[str, TaskRecord] = {}
        self._registry_lock = threading.Lock()

    # -- task lifecycle -----------------------------------------------------

    def create_task(self, body: TaskIn) -> TaskRecord:
        if not body.nlq.strip():
            raise HTTPException(status_code=400, detail="empty natural language query")
        try:
            tsq = parse_tsq(body.tsq) if body.tsq else EMPTY_TSQ
        except TsqError as exc:
            raise HTTPException(status_code=400, detail=f"malformed sketch: {exc}")
        literals = [Literal(l.type, l.value) for l in body.literals]
        for lit in literals:
            if lit.type not in ("text", "number"):
                raise HTTPException(status_code=400,
                                    detail=f"unknown literal type {lit.type!r}")
        with self._registry_lock:
            running = sum(1 for t in self.tasks.values() if t.state == "running")
            if running >= self.max_tasks:
                raise HTTPException(status_code=409, detail="task capacity exceeded")
            record = TaskRecord(id=uuid.uuid4().hex[:12])
            self.tasks[record.id] = record

        def work():
            db = Database.open(self.db_path)
            try:
                def emit(candidate: Candidate):
                    with record.lock:
                        record.candidates.append(candidate)

                report = enumerate_queries(
                    body.nlq, literals, self.model, tsq, db, self.catalog,
                    self.config, emit, stop=record.stop_event.is_set)
                with record.lock:
                    if record.stop_event.is_set():
                        record.state = "stopped"
                    elif report.reason == "timeout":
                        record.state = "timeout"
                    else:
                        record.state = "done"
            except EngineError as exc:
                with record.lock:
                    record.state = "done"
                    record.error = str(exc)
            finally:
                db.close()

        threading.Thread(target=work, name=f"synth-{record.id}", daemon=True).start()
        return record

    def get_task(self, task_id: str) -> TaskRecord:
        record = self.tasks.get(task_id)
        if record is None:
            raise HTTPException(status_code=404, detail="unknown task id")
        return record

    def stop_task(self, task_id: str) -> TaskRecord:
        record = self.get_task(task_id)
        record.stop_event.set()
        with record.lock:
            if record.state != "running":
                return record
        return record

    def candidate_query(self, task_id: str, rank: int) -> PartialQuery:
        record = self.get_task(task_id)
        with record.lock:
            for candidate in record.candidates:
                if candidate.rank == rank:
                    return candidate.state.pq
        raise HTTPException(status_code=404, detail="unknown candidate rank")

    def preview(self, task_id: str, rank: int, mode: str) -> dict:
        pq = self.candidate_query(task_id, rank)
        sql = render_sql(pq, "executable")
        if mode == "preview":
            limit = pq.limit if isinstance(pq.limit, int) and pq.limit > 0 else 0
            cap = min(20, limit) if limit else 20
            if limit:
                sql = sql.replace(f"LIMIT {limit}", f"LIMIT {cap}")
            else:
                sql = f"{sql} LIMIT {cap}"
        db = Database.open(self.db_path)
        try:
            columns, rows = db.execute(sql, timeout=30.0)
        except EngineError as exc:
            raise HTTPException(status_code=500, detail=str(exc))
        finally:
            db.close()
        return {"sql": sql, "columns": columns, "rows": [list(r) for r in rows]}


def create_app(service: SynthesisService) -> FastAPI:
    app = FastAPI(title="sqlsynth")
    app.state.service = service

    @app.post("/api/tasks")
    def create_task(body: TaskIn):
        record = service.create_task(body)
        return {"task_id": record.id}

    @app.get("/api/tasks/{task_id}/candidates")
    def poll_candidates(task_id: str, after: int = 0):
        return service.get_task(task_id).snapshot(after)

    @app.post("/api/tasks/{task_id}/stop")
    def stop_task(task_id: str):
        record = service.stop_task(task_id)
        return {"task_id": record.id, "state": record.state, "ok": True}

    @app.get("/api/tasks/{task_id}/candidates/{rank}/preview")
    def preview(task_id: str, rank: int, mode: str = "preview"):
        if mode not in ("preview", "full"):
            raise HTTPException(status_code=400, detail="mode must be preview or full")
        return service.preview(task_id, rank, mode)

    @app.get("/api/autocomplete")
    def autocomplete_endpoint(q: str = "", limit: int = 10):
        matches = autocomplete(service.index, q, max(1, min(limit, 100)))
        return {"values": [
            {"value": value,
             "columns": sorted(f"{ref.table}.{ref.column}" for ref in refs)}
            for value, refs in matches
        ]}

    @app.get("/api/schema")
    def schema():
        return service.catalog.to_descriptor()

    return app
