"""HTTP API over immutable dataset snapshots.

A snapshot bundles (records, frequency table, severity ordering, cached
metrics). Snapshots never change: reordering severities creates a new
snapshot and returns its id, so concurrent readers need no locking beyond
the store's own insert/evict lock. The store keeps a bounded number of
snapshots and evicts least-recently-used ones.

Endpoints (all bodies JSON, all floats pre-rounded to 4 decimals so clients
can display them verbatim):

    POST /snapshots                      create from inline annotations or the packaged benchmark
    GET  /snapshots                      list live snapshot ids
    GET  /snapshots/{id}/metrics         ranked metrics + per-category curves
    POST /snapshots/{id}/reorder         new snapshot under a permuted severity ordering
    POST /snapshots/{id}/scenario        run a perturbation scenario (sync, or async with wait=false)
    GET  /snapshots/{id}/scenario        poll an async scenario job by token
    GET  /snapshots/{id}/lorenz/{category}  both curve constructions for one category

Errors use ``{"error": {"code", "message", "detail"?}}`` with stable codes:
snapshot_not_found, category_not_found, job_not_found, invalid_ordering,
validation_error, computation_error.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from concurrent.futures import Future, ThreadPoolExecutor
from contextlib import asynccontextmanager
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from harmrank.errors import ComputationError, HarmRankError, ValidationError
from harmrank.ingest import (
    AnnotationRecord,
    FrequencyTable,
    Granularity,
    Schema,
    SeverityOrdering,
    benchmark_annotations_path,
    build_frequency_table,
    default_severity_ordering,
    parse_annotations,
    read_severity_ordering,
)
from harmrank.metrics import CategoryMetrics, classic_lorenz, compute_table_metrics, derivative_lorenz
from harmrank.report import metrics_payload, polyline_payload, scenario_payload
from harmrank.sensitivity import ScenarioKind, ScenarioSpec, boundary_table, run_scenario


@dataclass(frozen=True)
class Snapshot:
    """One immutable dataset state with its metrics cache."""

    id: str
    table: FrequencyTable
    ordering: SeverityOrdering
    metrics: tuple[CategoryMetrics, ...]
    boundary: Mapping[str, tuple[float, float]]
    records: tuple[AnnotationRecord, ...]
    granularity: Granularity
    ci_convention: str


class SnapshotStore:
    """Thread-safe LRU map of snapshot id → snapshot."""

    def __init__(self, capacity: int = 64):
        if capacity < 1:
            raise ValidationError("snapshot capacity must be >= 1")
        self._capacity = capacity
        self._lock = threading.RLock()
        self._snapshots: OrderedDict[str, Snapshot] = OrderedDict()
        self._counter = 0

    def next_id(self) -> str:
        with self._lock:
            self._counter += 1
            return f"snap-{self._counter:06d}"

    def put(self, snapshot: Snapshot) -> None:
        with self._lock:
            self._snapshots[snapshot.id] = snapshot
            self._snapshots.move_to_end(snapshot.id)
            while len(self._snapshots) > self._capacity:
                self._snapshots.popitem(last=False)

    def get(self, snapshot_id: str) -> Snapshot | None:
        with self._lock:
            snapshot = self._snapshots.get(snapshot_id)
            if snapshot is not None:
                self._snapshots.move_to_end(snapshot_id)
            return snapshot

    def ids(self) -> list[str]:
        with self._lock:
            return list(self._snapshots)


class _Jobs:
    """Scenario futures by polling token, bounded by dropping finished jobs."""

    def __init__(self, keep: int = 256):
        self._lock = threading.Lock()
        self._futures: OrderedDict[str, Future] = OrderedDict()
        self._counter = 0
        self._keep = keep

    def add(self, future: Future) -> str:
        with self._lock:
            self._counter += 1
            token = f"job-{self._counter:06d}"
            self._futures[token] = future
            done = [t for t, f in self._futures.items() if f.done()]
            for token_done in done[: max(0, len(self._futures) - self._keep)]:
                del self._futures[token_done]
            return token

    def get(self, token: str) -> Future | None:
        with self._lock:
            return self._futures.get(token)


class AnnotationIn(BaseModel):
    category: str
    unit: str
    weight: int = 1
    subcategory: str | None = None


class SnapshotRequest(BaseModel):
    annotations: list[AnnotationIn] | None = None
    severity_order: list[str] | None = None
    benchmark: bool = False
    granularity: str = "category"
    ci_convention: str = "survival"


class ReorderRequest(BaseModel):
    ordering: list[str]


class ScenarioRequest(BaseModel):
    kind: str
    k_swaps: int | None = None
    removal_fraction: float | None = None
    trials: int | None = None
    base_seed: int = Field(default=0, ge=0)
    wait: bool = True


def _error(status: int, code: str, message: str, detail: object | None = None) -> JSONResponse:
    body: dict = {"error": {"code": code, "message": message}}
    if detail is not None:
        body["error"]["detail"] = detail
    return JSONResponse(status_code=status, content=body)


def _snapshot_payload(snapshot: Snapshot) -> dict:
    payload = metrics_payload(
        snapshot.metrics, snapshot.boundary, snapshot.table, snapshot.ci_convention
    )
    payload["id"] = snapshot.id
    return payload


def build_snapshot(
    store: SnapshotStore,
    records: Sequence[AnnotationRecord],
    ordering: SeverityOrdering,
    granularity: Granularity = Granularity.CATEGORY,
    ci_convention: str = "survival",
    table: FrequencyTable | None = None,
) -> Snapshot:
    if table is None:
        table = build_frequency_table(records, ordering, granularity)
    metrics = tuple(compute_table_metrics(table, ci_convention))
    snapshot = Snapshot(
        id=store.next_id(),
        table=table,
        ordering=ordering,
        metrics=metrics,
        boundary=boundary_table(table),
        records=tuple(records),
        granularity=granularity,
        ci_convention=ci_convention,
    )
    store.put(snapshot)
    return snapshot


def _reordered_table(table: FrequencyTable, old: SeverityOrdering, new: SeverityOrdering) -> FrequencyTable:
    columns = np.asarray([old.rank(unit) - 1 for unit in new.units], dtype=np.intp)
    return FrequencyTable(
        categories=table.categories,
        units=new.units,
        counts=table.counts[:, columns],
        freqs=table.freqs[:, columns],
        degenerate=table.degenerate,
        unmapped=table.unmapped,
    )


def create_app(
    capacity: int = 64,
    workers: int = 4,
    preload: Mapping[str, object] | None = None,
) -> FastAPI:
    """Application factory.

    ``preload`` optionally names an annotation file (keys ``input_path``,
    ``schema``, ``severity_order_path``, ``granularity``, ``ci_convention``)
    to ingest into the first snapshot at startup.
    """
    if workers < 1:
        raise ValidationError("worker count must be >= 1")
    store = SnapshotStore(capacity)
    jobs = _Jobs()
    executor = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="scenario")

    @asynccontextmanager
    async def _lifespan(app: FastAPI):
        yield
        executor.shutdown(wait=False, cancel_futures=True)

    app = FastAPI(
        title="harmrank service",
        version="0.1.0",
        docs_url=None,
        redoc_url=None,
        lifespan=_lifespan,
    )
    # The dashboard is typically served from a different local port than
    # the API; allow browser clients from any origin (the service carries
    # no credentials or per-user state).
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store
    app.state.executor = executor

    @app.exception_handler(RequestValidationError)
    async def _on_body_error(request: Request, exc: RequestValidationError):
        return _error(422, "validation_error", "request body failed validation", exc.errors())

    @app.exception_handler(HarmRankError)
    async def _on_domain_error(request: Request, exc: HarmRankError):
        if isinstance(exc, ValidationError):
            return _error(422, "validation_error", str(exc))
        return _error(500, "computation_error", str(exc))

    if preload is not None:
        parse = parse_annotations(preload["input_path"], Schema(preload["schema"]))
        path = preload.get("severity_order_path")
        ordering = read_severity_ordering(path) if path else default_severity_ordering()
        build_snapshot(
            store,
            parse.records,
            ordering,
            Granularity(preload.get("granularity", "category")),
            str(preload.get("ci_convention", "survival")),
        )

    @app.get("/snapshots")
    def list_snapshots() -> dict:
        return {"snapshots": store.ids(), "capacity": capacity}

    @app.post("/snapshots", status_code=201)
    def create_snapshot(body: SnapshotRequest):
        if body.benchmark:
            if body.annotations is not None:
                return _error(
                    422, "validation_error", "pass either annotations or benchmark, not both"
                )
            records = parse_annotations(
                benchmark_annotations_path(), Schema.AGGREGATED_TRIPLETS
            ).records
        elif body.annotations:
            records = [
                AnnotationRecord(
                    category=a.category,
                    unit=a.unit,
                    weight=a.weight,
                    subcategory=a.subcategory,
                )
                for a in body.annotations
            ]
        else:
            return _error(
                422, "validation_error", "request needs annotations or benchmark=true"
            )
        ordering = (
            SeverityOrdering(tuple(body.severity_order))
            if body.severity_order
            else default_severity_ordering()
        )
        snapshot = build_snapshot(
            store, records, ordering, Granularity(body.granularity), body.ci_convention
        )
        return _snapshot_payload(snapshot)

    @app.get("/snapshots/{snapshot_id}/metrics")
    def get_metrics(snapshot_id: str):
        snapshot = store.get(snapshot_id)
        if snapshot is None:
            return _error(404, "snapshot_not_found", f"no snapshot {snapshot_id!r}")
        return _snapshot_payload(snapshot)

    @app.post("/snapshots/{snapshot_id}/reorder", status_code=201)
    def post_reorder(snapshot_id: str, body: ReorderRequest):
        snapshot = store.get(snapshot_id)
        if snapshot is None:
            return _error(404, "snapshot_not_found", f"no snapshot {snapshot_id!r}")
        proposed = body.ordering
        current = set(snapshot.ordering.units)
        missing = sorted(current - set(proposed))
        extra = sorted(set(proposed) - current)
        if missing or extra or len(proposed) != len(snapshot.ordering.units):
            duplicates = sorted({u for u in proposed if proposed.count(u) > 1})
            return _error(
                422,
                "invalid_ordering",
                "ordering must be a permutation of the snapshot's units",
                {"missing": missing, "extra": extra, "duplicates": duplicates},
            )
        new_ordering = SeverityOrdering(tuple(proposed))
        new_table = _reordered_table(snapshot.table, snapshot.ordering, new_ordering)
        new_snapshot = build_snapshot(
            store,
            snapshot.records,
            new_ordering,
            snapshot.granularity,
            snapshot.ci_convention,
            table=new_table,
        )
        return _snapshot_payload(new_snapshot)

    @app.post("/snapshots/{snapshot_id}/scenario")
    def post_scenario(snapshot_id: str, body: ScenarioRequest):
        snapshot = store.get(snapshot_id)
        if snapshot is None:
            return _error(404, "snapshot_not_found", f"no snapshot {snapshot_id!r}")
        try:
            kind = ScenarioKind(body.kind)
        except ValueError:
            return _error(
                422, "validation_error",
                f"unknown scenario kind {body.kind!r}",
                {"valid": [k.value for k in ScenarioKind]},
            )
        spec = ScenarioSpec(
            kind=kind,
            k_swaps=body.k_swaps,
            removal_fraction=body.removal_fraction,
            trials=body.trials,
            base_seed=body.base_seed,
        )
        future = executor.submit(
            run_scenario,
            spec,
            snapshot.table,
            snapshot.ordering,
            snapshot.records,
            snapshot.granularity,
            snapshot.ci_convention,
        )
        if not body.wait:
            token = jobs.add(future)
            return JSONResponse(
                status_code=202,
                content={"job": token, "status": "pending", "snapshot": snapshot_id},
            )
        result = future.result()
        payload = scenario_payload(result)
        payload["snapshot"] = snapshot_id
        return payload

    @app.get("/snapshots/{snapshot_id}/scenario")
    def poll_scenario(snapshot_id: str, job: str):
        if store.get(snapshot_id) is None:
            return _error(404, "snapshot_not_found", f"no snapshot {snapshot_id!r}")
        future = jobs.get(job)
        if future is None:
            return _error(404, "job_not_found", f"no scenario job {job!r}")
        if not future.done():
            return {"job": job, "status": "pending", "snapshot": snapshot_id}
        error = future.exception()
        if error is not None:
            code = "validation_error" if isinstance(error, ValidationError) else "computation_error"
            return _error(422 if code == "validation_error" else 500, code, str(error))
        payload = scenario_payload(future.result())
        payload["snapshot"] = snapshot_id
        payload["job"] = job
        payload["status"] = "done"
        return payload

    @app.get("/snapshots/{snapshot_id}/lorenz/{category}")
    def get_lorenz(snapshot_id: str, category: str):
        snapshot = store.get(snapshot_id)
        if snapshot is None:
            return _error(404, "snapshot_not_found", f"no snapshot {snapshot_id!r}")
        if category not in snapshot.table.active_categories:
            return _error(
                404, "category_not_found",
                f"no category {category!r} in snapshot {snapshot_id!r}",
                {"categories": list(snapshot.table.active_categories)},
            )
        row = snapshot.table.row(category)
        return {
            "snapshot": snapshot_id,
            "category": category,
            "derivative": polyline_payload(derivative_lorenz(row)),
            "classic": polyline_payload(classic_lorenz(row)),
        }

    return app


def run(host: str = "127.0.0.1", port: int = 8765, **kwargs) -> None:
    import uvicorn

    uvicorn.run(create_app(**kwargs), host=host, port=port, log_level="warning")
