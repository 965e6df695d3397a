"""Context evaluation and aggregate views over the store.

Everything here is a pure read path: a context (interval plus optional
type/location/user/app filters) is evaluated against whichever index is
cheaper, then residual predicates filter the stream. Aggregations count
coalesced occurrences (record counts), so heat map, histogram and
distribution totals agree for the same context.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import ArgumentError, UnknownTypeError
from .model import (
    ApplicationRun,
    Context,
    EventRecord,
    LocationSelector,
    NodeLocation,
    TimeInterval,
    format_node_id,
)
from .store import EventStore

DEFAULT_EVENT_LIMIT = 50_000

# prefer per-type partition scans while the type set is small enough
TYPE_SCAN_MAX_TYPES = 8


@dataclass
class ContextResult:
    events: list[EventRecord]
    apps: set[ApplicationRun]
    interval: TimeInterval
    truncated: bool = False
    limit: int = DEFAULT_EVENT_LIMIT


@dataclass
class HeatMap:
    counts: dict[NodeLocation, int]
    max_value: int
    topology_nodes: int

    def total(self) -> int:
        return sum(self.counts.values())


@dataclass
class Distribution:
    group_by: str
    buckets: list[tuple[str, int]]  # sorted by count desc, key asc
    double_counted: bool = False

    def total(self) -> int:
        return sum(c for _, c in self.buckets)


@dataclass
class Histogram:
    bin_width_ms: int
    start_ts: int
    bins: list[int]

    def total(self) -> int:
        return sum(self.bins)

    def items(self) -> list[tuple[int, int]]:
        return [(self.start_ts + i * self.bin_width_ms, v) for i, v in enumerate(self.bins)]


GROUP_KEYS = ("cabinet", "blade", "node", "application")


class QueryEngine:
    def __init__(self, store: EventStore):
        self.store = store

    # -- event retrieval -------------------------------------------------

    def _scan_candidates(self, ctx: Context) -> list[EventRecord]:
        interval = ctx.interval
        if ctx.event_types is not None and len(ctx.event_types) <= TYPE_SCAN_MAX_TYPES:
            out: list[EventRecord] = []
            for type_id in sorted(ctx.event_types):
                if self.store.is_registered(type_id):
                    out.extend(self.store.scan_events_by_type(type_id, interval))
            out.sort(key=lambda r: r.sort_key())
            return out
        if ctx.locations is not None:
            out = []
            seen: set[tuple] = set()
            for sel in sorted(ctx.locations, key=str):
                for rec in self.store.scan_events_by_location(sel, interval):
                    key = rec.sort_key()
                    if key not in seen:  # overlapping selectors must not duplicate
                        seen.add(key)
                        out.append(rec)
            out.sort(key=lambda r: r.sort_key())
            return out
        out = []
        for info in self.store.types():
            out.extend(self.store.scan_events_by_type(info.type_id, interval))
        out.sort(key=lambda r: r.sort_key())
        return out

    def events_for(self, ctx: Context) -> list[EventRecord]:
        return [r for r in self._scan_candidates(ctx) if ctx.matches_event(r)]

    def evaluate_context(self, ctx: Context, limit: int = DEFAULT_EVENT_LIMIT) -> ContextResult:
        if limit < 1:
            raise ArgumentError("limit must be >= 1")
        events = self.events_for(ctx)
        truncated = len(events) > limit
        if truncated:
            events = events[:limit]
        apps = {r for r in self.store.scan_apps(interval=ctx.interval) if ctx.matches_run(r)}
        return ContextResult(events, apps, ctx.interval, truncated, limit)

    # -- aggregate views ---------------------------------------------------

    def heatmap(self, ctx: Context, type_id: str) -> HeatMap:
        if not self.store.is_registered(type_id):
            raise UnknownTypeError(f"event type {type_id!r} is not registered")
        narrowed = Context(
            ctx.interval,
            event_types=frozenset({type_id}),
            locations=ctx.locations,
            users=ctx.users,
            apps=ctx.apps,
        )
        counts: dict[NodeLocation, int] = {}
        for rec in self.events_for(narrowed):
            counts[rec.location] = counts.get(rec.location, 0) + rec.count
        return HeatMap(
            counts=counts,
            max_value=max(counts.values(), default=0),
            topology_nodes=self.store.topology.total_nodes,
        )

    def distribution(self, ctx: Context, group_by: str) -> Distribution:
        if group_by not in GROUP_KEYS:
            raise ArgumentError(f"group_by must be one of {GROUP_KEYS}")
        events = self.events_for(ctx)
        buckets: dict[str, int] = {}
        double_counted = False
        if group_by == "application":
            runs = self.store.scan_apps(interval=ctx.interval)
            for rec in events:
                hits = [
                    run for run in runs
                    if rec.location in run.nodes and run.active_at(rec.timestamp)
                ]
                if len(hits) > 1:
                    double_counted = True
                for run in hits:
                    buckets[run.job_id] = buckets.get(run.job_id, 0) + rec.count
        else:
            for rec in events:
                if group_by == "cabinet":
                    key = rec.location.cabinet_id()
                elif group_by == "blade":
                    key = rec.location.blade_id()
                else:
                    key = format_node_id(rec.location)
                buckets[key] = buckets.get(key, 0) + rec.count
        ordered = sorted(buckets.items(), key=lambda kv: (-kv[1], kv[0]))
        return Distribution(group_by, ordered, double_counted)

    def histogram(self, ctx: Context, bin_width_ms: int) -> Histogram:
        if bin_width_ms <= 0:
            raise ArgumentError("bin_width_ms must be > 0")
        interval = ctx.interval
        n_bins = -(-interval.length_ms // bin_width_ms)  # ceil; last bin may be short
        bins = [0] * n_bins
        for rec in self.events_for(ctx):
            bins[(rec.timestamp - interval.start_ts) // bin_width_ms] += rec.count
        return Histogram(bin_width_ms, interval.start_ts, bins)

    def placements_at(self, ts: int) -> dict[ApplicationRun, frozenset[NodeLocation]]:
        if ts <= 0:
            raise ArgumentError("timestamp must be > 0")
        interval = TimeInterval(ts, ts + 1)
        return {
            run: run.nodes
            for run in self.store.scan_apps(interval=interval)
            if run.active_at(ts)
        }
