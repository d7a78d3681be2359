"""HTTP service wrapping the selection engine.

Pools are uploaded (or synthesized) once and held in memory; scoring,
selection, reporting and sweeps then run against them by pool id. Pool ids
are content hashes, so re-uploading the same file is idempotent.

Run with `sas serve` or `uvicorn sas.service:app`.
"""

import hashlib
import io
import math

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse

from .errors import PoolFormatError, PoolValidationError
from .floatfmt import round_float
from .pool_io import EmbeddingPool, read_pool, pool_to_bytes
from .report import selection_report, sweep
from .sampler import (
    SelectionConfig,
    run_selection,
    selection_from_doc,
    selection_to_doc,
)
from .schemas import (
    ErrorResponse,
    HealthResponse,
    PoolListResponse,
    PoolSummary,
    SampleRequest,
    ScoreResponse,
    ScoreRow,
    SelectionModel,
    SweepRequest,
    SweepResponse,
    SynthRequest,
)
from .scoring import ScoreTable, mixed_score, score_pool
from .synth import SyntheticSpec, generate_pool

app = FastAPI(
    title="sas selection service",
    description="Semantic subset selection over unit-normalized embedding pools.",
    version="0.1.0",
)


class PoolStore:
    """In-memory pool registry with cached score tables."""

    def __init__(self) -> None:
        self.pools: dict[str, EmbeddingPool] = {}
        self.tables: dict[str, ScoreTable] = {}

    def add(self, data: bytes) -> str:
        pool = read_pool(io.BytesIO(data))
        pool_id = hashlib.sha256(data).hexdigest()[:16]
        self.pools[pool_id] = pool
        return pool_id

    def get(self, pool_id: str) -> EmbeddingPool:
        pool = self.pools.get(pool_id)
        if pool is None:
            raise HTTPException(status_code=404, detail=f"unknown pool {pool_id!r}")
        return pool

    def table(self, pool_id: str) -> ScoreTable:
        if pool_id not in self.tables:
            self.tables[pool_id] = score_pool(self.get(pool_id))
        return self.tables[pool_id]

    def drop(self, pool_id: str) -> None:
        self.get(pool_id)
        self.pools.pop(pool_id)
        self.tables.pop(pool_id, None)


store = PoolStore()

_ERROR_RESPONSES = {400: {"model": ErrorResponse}, 404: {"model": ErrorResponse}}


@app.exception_handler(PoolFormatError)
@app.exception_handler(PoolValidationError)
@app.exception_handler(ValueError)
async def _bad_request(request: Request, exc: Exception) -> JSONResponse:
    return JSONResponse(
        status_code=400,
        content={"error": type(exc).__name__, "detail": str(exc)},
    )


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", pools=len(store.pools))


def _summary(pool_id: str, pool: EmbeddingPool) -> PoolSummary:
    return PoolSummary(
        pool_id=pool_id,
        dim=pool.dim,
        n_classes=pool.n_classes,
        n_images=pool.n_images,
        classes=[
            {"name": name, "count": count}
            for name, count in pool.class_histogram().items()
        ],
    )


@app.post("/pools", response_model=PoolSummary, responses=_ERROR_RESPONSES)
async def upload_pool(request: Request) -> PoolSummary:
    """Register a pool from SASE bytes (body: application/octet-stream)."""
    data = await request.body()
    pool_id = store.add(data)
    return _summary(pool_id, store.get(pool_id))


@app.post("/pools/synth", response_model=PoolSummary, responses=_ERROR_RESPONSES)
def synth_pool(request: SynthRequest) -> PoolSummary:
    spec = SyntheticSpec(
        dim=request.dim,
        n_classes=request.classes,
        per_class=request.per_class,
        concentration=request.kappa,
        duplicate_fraction=request.dup,
        seed=request.seed,
    )
    pool = generate_pool(spec)
    pool_id = store.add(pool_to_bytes(pool))
    return _summary(pool_id, store.get(pool_id))


@app.get("/pools", response_model=PoolListResponse)
def list_pools() -> PoolListResponse:
    return PoolListResponse(
        pools=[_summary(pool_id, pool) for pool_id, pool in sorted(store.pools.items())]
    )


@app.get("/pools/{pool_id}", response_model=PoolSummary, responses=_ERROR_RESPONSES)
def get_pool(pool_id: str) -> PoolSummary:
    return _summary(pool_id, store.get(pool_id))


@app.delete("/pools/{pool_id}", responses=_ERROR_RESPONSES)
def delete_pool(pool_id: str) -> dict:
    store.drop(pool_id)
    return {"deleted": pool_id}


@app.get("/pools/{pool_id}/scores", response_model=ScoreResponse, responses=_ERROR_RESPONSES)
def get_scores(
    pool_id: str,
    lambda_: float | None = Query(default=None, alias="lambda"),
) -> ScoreResponse:
    pool = store.get(pool_id)
    table = store.table(pool_id)
    mixed = mixed_score(table, pool, lambda_) if lambda_ is not None else None
    rows = []
    for i in range(pool.n_images):
        div = float(table.diversity_static[i])
        rows.append(
            ScoreRow(
                image_id=pool.image_ids[i],
                class_name=pool.class_names[int(pool.labels[i])],
                relevance=round_float(float(table.relevance[i])),
                separation=round_float(float(table.separation[i])),
                diversity_static=None if math.isnan(div) else round_float(div),
                margin=round_float(float(table.margin[i])),
                mixed=round_float(float(mixed[i])) if mixed is not None else None,
            )
        )
    return ScoreResponse(pool_id=pool_id, rows=rows)


def _config_from_request(request: SampleRequest) -> SelectionConfig:
    selector = "margin_only" if request.selector == "margin" else request.selector
    config = SelectionConfig(
        ipc=request.ipc,
        candidate_ratio=request.ratio,
        selector=selector,
        lambda_=request.lambda_,
        seed=request.seed,
        use_rel=request.use_rel,
        use_sep=request.use_sep,
        use_div=request.use_div,
    )
    config.validate()
    return config


@app.post("/pools/{pool_id}/selections", response_model=SelectionModel, responses=_ERROR_RESPONSES)
def make_selection(pool_id: str, request: SampleRequest) -> dict:
    pool = store.get(pool_id)
    table = store.table(pool_id)
    selection = run_selection(pool, table, _config_from_request(request))
    return selection_to_doc(selection)


@app.post("/pools/{pool_id}/report", responses=_ERROR_RESPONSES)
def make_report(pool_id: str, selection: SelectionModel) -> dict:
    from .report import report_to_doc

    pool = store.get(pool_id)
    table = store.table(pool_id)
    doc = selection.model_dump(by_alias=True)
    rehydrated = selection_from_doc(doc, pool, table)
    return report_to_doc(selection_report(pool, table, rehydrated))


@app.post("/pools/{pool_id}/sweep", response_model=SweepResponse, responses=_ERROR_RESPONSES)
def run_sweep(pool_id: str, request: SweepRequest) -> SweepResponse:
    pool = store.get(pool_id)
    grid = [_config_from_request(entry) for entry in request.grid]
    rows = sweep(pool, grid)
    for row in rows:
        for key, value in row.items():
            if isinstance(value, float):
                row[key] = round_float(value)
    return SweepResponse(rows=rows)
