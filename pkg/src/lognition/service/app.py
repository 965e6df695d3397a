"""HTTP service: JSON endpoints over the query engine and analytics, plus a
server-push event channel with a long-polling fallback.

Simple queries (context, heat map, distribution, histogram, placements) and
analytics (transfer entropy, top terms, TF-IDF) run in the worker thread
pool, so a long analytic request never holds up cheap queries. Responses are
deterministic for a fixed store state.
"""
from __future__ import annotations

import asyncio
import logging
import uuid
from contextlib import asynccontextmanager
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from ..analytics import TokenFilters, te_windows, tf_idf, word_count
from ..errors import LognitionError
from ..ingest import FileTailBus, StreamConsumer, default_catalog, load_catalog
from ..model import format_node_id
from ..query import QueryEngine
from ..store import EventStore
from .config import ServiceConfig
from .schemas import (
    ContextParams,
    QueryRequest,
    app_json,
    context_result_json,
    distribution_json,
    error_body,
    heatmap_json,
    histogram_json,
    ok,
    parse_ts,
)
from .stream import StreamHub

log = logging.getLogger(__name__)


def create_app(
    store: Optional[EventStore] = None,
    config: Optional[ServiceConfig] = None,
    own_store: bool = False,
) -> FastAPI:
    config = config or ServiceConfig()
    if store is None:
        store = EventStore(config.store_path, ring=config.ring, topology=config.topology)
        own_store = True
    catalog = (
        load_catalog(config.catalog_path) if config.catalog_path else default_catalog()
    )
    for t in catalog.types:
        store.register_type(t.type_id, t.display_name, t.category.value, t.severity.value)
    engine = QueryEngine(store)
    filters = TokenFilters(stopwords=catalog.stopwords, whitelist=catalog.token_whitelist)
    hub = StreamHub(config.stream_buffer, config.heartbeat_seconds)
    store.add_listener(hub.publish)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        hub.attach_loop(asyncio.get_running_loop())
        consumer = None
        if config.tail:
            bus = FileTailBus(config.tail)
            consumer = StreamConsumer(bus, sorted(config.tail), store, catalog)
        try:
            yield
        finally:
            if consumer is not None:
                consumer.stop()
                consumer.join(timeout=5)
            store.flush() if not own_store else store.close()

    app = FastAPI(title="lognition", lifespan=lifespan)
    app.state.store = store
    app.state.engine = engine
    app.state.catalog = catalog
    app.state.hub = hub
    app.state.config = config

    # -- error envelopes ---------------------------------------------------

    @app.exception_handler(RequestValidationError)
    async def on_validation(request: Request, exc: RequestValidationError):
        fields = [
            {"loc": ".".join(str(p) for p in err["loc"]), "message": err["msg"]}
            for err in exc.errors()
        ]
        return JSONResponse(error_body("validation", "invalid request", fields), status_code=400)

    @app.exception_handler(LognitionError)
    async def on_domain_error(request: Request, exc: LognitionError):
        return JSONResponse(error_body(type(exc).__name__, str(exc)), status_code=400)

    @app.exception_handler(StarletteHTTPException)
    async def on_http_error(request: Request, exc: StarletteHTTPException):
        return JSONResponse(
            error_body(f"http_{exc.status_code}", str(exc.detail)), status_code=exc.status_code
        )

    @app.exception_handler(Exception)
    async def on_internal(request: Request, exc: Exception):
        incident = uuid.uuid4().hex[:12]
        log.exception("internal error %s on %s", incident, request.url.path)
        return JSONResponse(
            error_body("internal", f"internal error, incident {incident}"), status_code=500
        )

    def context_from_query(
        start: str,
        end: str,
        types: Optional[str] = None,
        locations: Optional[str] = None,
        users: Optional[str] = None,
        apps: Optional[str] = None,
    ):
        return ContextParams(
            start=start, end=end, types=types, locations=locations, users=users, apps=apps
        ).to_context()

    # -- plain endpoints -----------------------------------------------------

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/types")
    def types():
        return ok(
            [
                {
                    "type_id": t.type_id,
                    "display_name": t.display_name,
                    "category": t.category,
                    "severity": t.severity,
                }
                for t in store.types()
            ]
        )

    @app.get("/topology")
    def topology():
        t = store.topology
        return ok(
            {
                "rows": t.rows,
                "cols": t.cols,
                "cages_per_cabinet": t.cages_per_cabinet,
                "slots_per_cage": t.slots_per_cage,
                "nodes_per_slot": t.nodes_per_slot,
                "total_nodes": t.total_nodes,
            }
        )

    @app.get("/stats")
    def stats():
        return ok(store.store_stats().as_dict())

    # -- query endpoints -----------------------------------------------------

    @app.post("/query")
    def query(body: QueryRequest):
        result = engine.evaluate_context(body.to_context(), limit=body.limit)
        return ok(context_result_json(result), truncated=result.truncated)

    @app.get("/heatmap")
    def heatmap(
        start: str,
        end: str,
        type: str,
        locations: Optional[str] = None,
        users: Optional[str] = None,
        apps: Optional[str] = None,
    ):
        ctx = context_from_query(start, end, None, locations, users, apps)
        return ok(heatmap_json(engine.heatmap(ctx, type)))

    @app.get("/distribution")
    def distribution(
        start: str,
        end: str,
        group_by: str,
        types: Optional[str] = None,
        locations: Optional[str] = None,
        users: Optional[str] = None,
        apps: Optional[str] = None,
    ):
        ctx = context_from_query(start, end, types, locations, users, apps)
        return ok(distribution_json(engine.distribution(ctx, group_by)))

    @app.get("/histogram")
    def histogram(
        start: str,
        end: str,
        bin_width_ms: int,
        types: Optional[str] = None,
        locations: Optional[str] = None,
        users: Optional[str] = None,
        apps: Optional[str] = None,
    ):
        ctx = context_from_query(start, end, types, locations, users, apps)
        return ok(histogram_json(engine.histogram(ctx, bin_width_ms)))

    @app.get("/placements")
    def placements(ts: str):
        at = parse_ts(ts, "ts")
        rows = [
            {**app_json(run), "nodes": sorted(format_node_id(n) for n in nodes)}
            for run, nodes in engine.placements_at(at).items()
        ]
        rows.sort(key=lambda r: r["job_id"])
        return ok({"ts": at, "placements": rows})

    # -- analytics endpoints ---------------------------------------------------

    @app.get("/te")
    def te(
        start: str,
        end: str,
        type_a: str,
        type_b: str,
        window_ms: int,
        step_ms: int,
        bin_width_ms: int = 1000,
        threshold: float = 0.0,
        k: int = 1,
        locations: Optional[str] = None,
    ):
        ctx = context_from_query(start, end, None, locations)
        windows = te_windows(
            engine, ctx, type_a, type_b, window_ms, step_ms, bin_width_ms, threshold, k
        )
        return ok(
            {
                "type_a": type_a,
                "type_b": type_b,
                "window_ms": window_ms,
                "step_ms": step_ms,
                "bin_width_ms": bin_width_ms,
                "windows": [
                    {
                        "start": w.window_start,
                        "te_a_to_b": w.result.te_x_to_y,
                        "te_b_to_a": w.result.te_y_to_x,
                        "n_samples": w.result.n_samples,
                        "low_support": w.low_support,
                    }
                    for w in windows
                ],
            }
        )

    @app.get("/topterms")
    def topterms(
        start: str,
        end: str,
        n: int = 50,
        types: Optional[str] = None,
        locations: Optional[str] = None,
    ):
        ctx = context_from_query(start, end, types, locations)
        stats_ = word_count(engine, ctx, filters)
        return ok(
            {
                "total_docs": stats_.total_docs,
                "total_tokens": stats_.total_tokens,
                "terms": [
                    {"term": e.term, "count": e.raw_count, "docs": e.doc_frequency}
                    for e in stats_.top(n)
                ],
            }
        )

    @app.get("/tfidf")
    def tfidf(
        start: str,
        end: str,
        n: int = 50,
        doc_unit: str = "message",
        smooth: bool = False,
        types: Optional[str] = None,
        locations: Optional[str] = None,
    ):
        ctx = context_from_query(start, end, types, locations)
        stats_ = tf_idf(engine, ctx, doc_unit=doc_unit, smooth=smooth, filters=filters)
        return ok(
            {
                "total_docs": stats_.total_docs,
                "doc_unit": doc_unit,
                "terms": [
                    {
                        "term": e.term,
                        "score": e.score,
                        "count": e.raw_count,
                        "docs": e.doc_frequency,
                    }
                    for e in stats_.top(n)
                ],
            }
        )

    # -- live stream -----------------------------------------------------------

    @app.get("/stream")
    async def stream(types: Optional[str] = None):
        wanted = frozenset(t for t in types.split(",") if t) if types else None
        sub = hub.subscribe(wanted)
        return StreamingResponse(hub.sse_stream(sub), media_type="text/event-stream")

    @app.get("/poll")
    def poll(since: int = 0, types: Optional[str] = None, limit: int = 500):
        wanted = frozenset(t for t in types.split(",") if t) if types else None
        frames, cursor, lagged = hub.frames_since(since, wanted, limit)
        return ok({"frames": frames, "next": cursor, "lagged": lagged})

    if config.static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.static_dir, html=True), name="ui")

    return app


def serve(config: ServiceConfig) -> None:
    """Blocking server entry point used by the CLI."""
    import uvicorn

    app = create_app(config=config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
