"""Request models and JSON shaping for the HTTP API.

Context timestamps are accepted as epoch milliseconds or ISO-8601 text;
responses always use epoch milliseconds. Every non-health response is an
envelope carrying either data or error, never both.
"""
from __future__ import annotations

from datetime import datetime, timezone
from typing import Optional, Union

from pydantic import BaseModel, Field, field_validator

from ..errors import ArgumentError
from ..model import (
    ApplicationRun,
    Context,
    EventRecord,
    LocationSelector,
    TimeInterval,
    format_node_id,
)
from ..query import ContextResult, Distribution, HeatMap, Histogram

Timestamp = Union[int, str]


def parse_ts(value: Timestamp, name: str) -> int:
    if isinstance(value, int):
        return value
    text = value.strip()
    if text.lstrip("-").isdigit():
        return int(text)
    try:
        dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as exc:
        raise ArgumentError(f"{name}: not epoch ms or ISO-8601: {value!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    seconds = int(dt.replace(microsecond=0).timestamp())
    return seconds * 1000 + dt.microsecond // 1000


class ContextParams(BaseModel):
    start: Timestamp
    end: Timestamp
    types: Optional[list[str]] = None
    locations: Optional[list[str]] = None
    users: Optional[list[str]] = None
    apps: Optional[list[str]] = None

    @field_validator("types", "locations", "users", "apps", mode="before")
    @classmethod
    def _split_csv(cls, v):
        # GET requests pass comma-separated values
        if isinstance(v, str):
            v = [part for part in v.split(",") if part]
        return v or None

    def to_context(self) -> Context:
        interval = TimeInterval(parse_ts(self.start, "start"), parse_ts(self.end, "end"))
        locations = None
        if self.locations:
            locations = frozenset(LocationSelector.parse(text) for text in self.locations)
        return Context(
            interval=interval,
            event_types=frozenset(self.types) if self.types else None,
            locations=locations,
            users=frozenset(self.users) if self.users else None,
            apps=frozenset(self.apps) if self.apps else None,
        )


class QueryRequest(ContextParams):
    limit: int = Field(default=50_000, ge=1, le=1_000_000)


def ok(data, truncated: Optional[bool] = None) -> dict:
    out = {"status": "ok", "data": data}
    if truncated is not None:
        out["truncated"] = truncated
    return out


def error_body(code: str, message: str, fields: Optional[list] = None) -> dict:
    err = {"code": code, "message": message}
    if fields:
        err["fields"] = fields
    return {"status": "error", "error": err}


def event_json(rec: EventRecord) -> dict:
    return {
        "ts": rec.timestamp,
        "type": rec.type_id,
        "location": format_node_id(rec.location),
        "count": rec.count,
        "message": rec.raw_message,
        "attributes": dict(rec.attributes),
    }


def app_json(run: ApplicationRun) -> dict:
    return {
        "job_id": run.job_id,
        "user": run.user,
        "app_name": run.app_name,
        "start_ts": run.start_ts,
        "end_ts": run.end_ts,
        "nodes": sorted(format_node_id(n) for n in run.nodes),
        "exit_status": run.exit_status.value,
    }


def context_result_json(result: ContextResult) -> dict:
    return {
        "interval": {"start": result.interval.start_ts, "end": result.interval.end_ts},
        "events": [event_json(r) for r in result.events],
        "apps": sorted((app_json(r) for r in result.apps), key=lambda a: a["job_id"]),
        "truncated": result.truncated,
        "limit": result.limit,
    }


def heatmap_json(heat: HeatMap) -> dict:
    return {
        "cells": [
            {"node": format_node_id(loc), "count": count}
            for loc, count in sorted(heat.counts.items())
        ],
        "max": heat.max_value,
        "total": heat.total(),
        "topology_nodes": heat.topology_nodes,
    }


def distribution_json(dist: Distribution) -> dict:
    return {
        "group_by": dist.group_by,
        "buckets": [{"key": k, "count": c} for k, c in dist.buckets],
        "total": dist.total(),
        "double_counted": dist.double_counted,
    }


def histogram_json(hist: Histogram) -> dict:
    return {
        "bin_width_ms": hist.bin_width_ms,
        "start": hist.start_ts,
        "bins": [{"start": start, "count": count} for start, count in hist.items()],
        "total": hist.total(),
    }
