"""Operator command line: generate, import, query, analyze, serve.

Query-style commands work against a local store directory by default and
act as a thin HTTP client when --server is given, so the same commands
drive either an offline store or a running service.
"""
from __future__ import annotations

import json
import os
import sys
from typing import Optional

import click

from .analytics import TokenFilters, te_windows, tf_idf, word_count
from .errors import LognitionError
from .ingest import default_catalog, import_directory, load_catalog
from .model import Context, TimeInterval
from .query import QueryEngine
from .ring import RingConfig
from .service.config import load_config
from .service.schemas import (
    QueryRequest,
    context_result_json,
    heatmap_json,
    parse_ts,
)
from .store import EventStore
from .synth import demo_spec, load_spec, synth_generate

DEFAULT_STORE = os.environ.get("LOGNITION_STORE_PATH", "./lognition-store")


def _open_store(path: str, storage_nodes: int, replication: int) -> EventStore:
    if os.path.exists(os.path.join(path, "meta.json")):
        return EventStore(path)
    return EventStore(
        path, ring=RingConfig(storage_nodes=storage_nodes, replication_factor=replication)
    )


def _catalog(path: Optional[str]):
    return load_catalog(path) if path else default_catalog()


def _emit(data: dict, as_json: bool, human: str) -> None:
    if as_json:
        click.echo(json.dumps(data, sort_keys=True))
    else:
        click.echo(human)


def _http_get(server: str, path: str, params: dict) -> dict:
    import httpx

    response = httpx.get(server.rstrip("/") + path, params=params, timeout=120)
    body = response.json()
    if response.status_code != 200:
        raise click.ClickException(f"server error: {body.get('error')}")
    return body["data"]


store_option = click.option(
    "--store", "store_path", default=DEFAULT_STORE, show_default=True,
    help="Store directory for offline access.",
)
server_option = click.option(
    "--server", default=None, metavar="URL",
    help="Base URL of a running service; queries go over HTTP instead of the local store.",
)
json_option = click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")


@click.group()
@click.version_option()
def cli():
    """Spatio-temporal log analytics toolkit."""


@cli.command()
@click.argument("spec_file")
@click.option("-o", "--out", "out_dir", required=True, help="Output directory.")
@json_option
def synth(spec_file: str, out_dir: str, as_json: bool):
    """Generate a synthetic corpus; SPEC_FILE may be a YAML file or 'demo'."""
    spec = demo_spec() if spec_file == "demo" else load_spec(spec_file)
    truth = synth_generate(spec, out_dir)
    _emit(
        truth,
        as_json,
        f"generated {truth['total_lines']} lines over {len(truth['files'])} files "
        f"plus {truth['apps']['count']} app runs in {out_dir}",
    )


@cli.command("import")
@click.argument("directory")
@store_option
@click.option("--catalog", "catalog_path", default=None, help="Pattern catalog YAML.")
@click.option("--quarantine", default=None, help="File for quarantined lines.")
@click.option("--storage-nodes", default=4, show_default=True)
@click.option("--replication", default=1, show_default=True)
@json_option
def import_cmd(
    directory: str,
    store_path: str,
    catalog_path: Optional[str],
    quarantine: Optional[str],
    storage_nodes: int,
    replication: int,
    as_json: bool,
):
    """Batch import all *.log files (and apps.jsonl) from DIRECTORY."""
    if not os.path.isdir(directory):
        raise click.UsageError(f"not a directory: {directory}")
    with _open_store(store_path, storage_nodes, replication) as store:
        stats = import_directory(_catalog(catalog_path), directory, store, quarantine)
    data = stats.as_dict()
    _emit(
        data,
        as_json,
        f"read {data['lines_read']} lines: {data['lines_matched']} matched, "
        f"{data['lines_unmatched']} unmatched, {data['lines_quarantined']} quarantined; "
        f"wrote {data['records_written']} records, loaded {data['apps_loaded']} runs",
    )


@cli.command()
@click.argument("config_file", required=False)
def serve(config_file: Optional[str]):
    """Run the HTTP service; CONFIG_FILE is the service YAML."""
    from .service import serve as run_server

    run_server(load_config(config_file))


def _parse_context_json(text: str) -> QueryRequest:
    try:
        body = json.loads(text)
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"context is not valid JSON: {exc}")
    if not isinstance(body, dict):
        raise click.UsageError("context JSON must be an object")
    try:
        return QueryRequest.model_validate(body)
    except Exception as exc:
        raise click.UsageError(f"bad context: {exc}")


@cli.command()
@click.argument("context_json")
@store_option
@server_option
@json_option
def query(context_json: str, store_path: str, server: Optional[str], as_json: bool):
    """Evaluate a context given as a JSON object, e.g.
    '{"start": 0, "end": 3600000, "types": ["MCE"]}'."""
    request = _parse_context_json(context_json)
    if server:
        import httpx

        response = httpx.post(server.rstrip("/") + "/query",
                              json=json.loads(context_json), timeout=120)
        body = response.json()
        if response.status_code != 200:
            raise click.ClickException(f"server error: {body.get('error')}")
        data = body["data"]
    else:
        with EventStore(store_path) as store:
            engine = QueryEngine(store)
            result = engine.evaluate_context(request.to_context(), limit=request.limit)
            data = context_result_json(result)
    _emit(
        data,
        as_json,
        f"{len(data['events'])} events, {len(data['apps'])} runs in "
        f"[{data['interval']['start']}, {data['interval']['end']})"
        + (" (truncated)" if data["truncated"] else ""),
    )


@cli.command()
@click.option("--start", required=True)
@click.option("--end", required=True)
@click.option("--type", "type_id", required=True)
@store_option
@server_option
@json_option
def heatmap(start, end, type_id, store_path, server, as_json):
    """Per-node occurrence counts for one event type."""
    if server:
        data = _http_get(server, "/heatmap", {"start": start, "end": end, "type": type_id})
    else:
        with EventStore(store_path) as store:
            engine = QueryEngine(store)
            ctx = Context(TimeInterval(parse_ts(start, "start"), parse_ts(end, "end")))
            data = heatmap_json(engine.heatmap(ctx, type_id))
    hottest = max(data["cells"], key=lambda c: c["count"])["node"] if data["cells"] else "-"
    _emit(data, as_json, f"{len(data['cells'])} active nodes, max {data['max']} at {hottest}")


@cli.command()
@click.option("--start", required=True)
@click.option("--end", required=True)
@click.option("--type-a", required=True)
@click.option("--type-b", required=True)
@click.option("--window-ms", default=3_600_000, show_default=True)
@click.option("--step-ms", default=1_800_000, show_default=True)
@click.option("--bin-width-ms", default=1000, show_default=True)
@click.option("--threshold", default=0.0, show_default=True)
@store_option
@server_option
@json_option
def te(start, end, type_a, type_b, window_ms, step_ms, bin_width_ms, threshold,
       store_path, server, as_json):
    """Sliding-window transfer entropy between two event types."""
    if server:
        data = _http_get(server, "/te", {
            "start": start, "end": end, "type_a": type_a, "type_b": type_b,
            "window_ms": window_ms, "step_ms": step_ms,
            "bin_width_ms": bin_width_ms, "threshold": threshold,
        })
    else:
        with EventStore(store_path) as store:
            engine = QueryEngine(store)
            ctx = Context(TimeInterval(parse_ts(start, "start"), parse_ts(end, "end")))
            windows = te_windows(engine, ctx, type_a, type_b, window_ms, step_ms,
                                 bin_width_ms, threshold)
            data = {
                "type_a": type_a, "type_b": type_b, "window_ms": window_ms,
                "step_ms": step_ms, "bin_width_ms": bin_width_ms,
                "windows": [
                    {"start": w.window_start, "te_a_to_b": w.result.te_x_to_y,
                     "te_b_to_a": w.result.te_y_to_x, "n_samples": w.result.n_samples,
                     "low_support": w.low_support}
                    for w in windows
                ],
            }
    if data["windows"]:
        best = max(data["windows"], key=lambda w: w["te_a_to_b"])
        human = (f"{len(data['windows'])} windows; "
                 f"max TE({type_a}->{type_b}) = {best['te_a_to_b']:.4f} bits at {best['start']}")
    else:
        human = "no full windows inside interval"
    _emit(data, as_json, human)


@cli.command()
@click.option("--start", required=True)
@click.option("--end", required=True)
@click.option("-n", "top_n", default=20, show_default=True)
@click.option("--types", default=None, help="Comma-separated type filter.")
@store_option
@server_option
@json_option
def topterms(start, end, top_n, types, store_path, server, as_json):
    """Most frequent tokens in raw messages for a context."""
    if server:
        params = {"start": start, "end": end, "n": top_n}
        if types:
            params["types"] = types
        data = _http_get(server, "/topterms", params)
    else:
        with EventStore(store_path) as store:
            engine = QueryEngine(store)
            catalog = default_catalog()
            filters = TokenFilters(catalog.stopwords, catalog.token_whitelist)
            ctx = Context(
                TimeInterval(parse_ts(start, "start"), parse_ts(end, "end")),
                event_types=frozenset(types.split(",")) if types else None,
            )
            stats = word_count(engine, ctx, filters)
            data = {
                "total_docs": stats.total_docs,
                "total_tokens": stats.total_tokens,
                "terms": [
                    {"term": e.term, "count": e.raw_count, "docs": e.doc_frequency}
                    for e in stats.top(top_n)
                ],
            }
    top = ", ".join(f"{t['term']}({t['count']})" for t in data["terms"][:5])
    _emit(data, as_json, f"{data['total_docs']} messages; top terms: {top}")


@cli.command()
@store_option
@server_option
@json_option
def stats(store_path, server, as_json):
    """Store size and per-shard placement totals."""
    if server:
        data = _http_get(server, "/stats", {})
    else:
        with EventStore(store_path) as store:
            data = store.store_stats().as_dict()
    _emit(
        data,
        as_json,
        f"{data['total_partitions']} partitions, {data['total_rows']} rows, "
        f"{data['total_bytes']} bytes across {len(data['per_node'])} shards "
        f"({data['event_rows']} event rows, {data['app_rows']} app rows)",
    )


def main() -> None:
    """Console entry point: usage errors exit 2, runtime errors exit 1."""
    try:
        cli()
    except LognitionError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
