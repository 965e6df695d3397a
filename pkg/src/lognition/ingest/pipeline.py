"""Batch ETL: raw lines to records to store writes.

The flow is parse (first matching pattern wins), coalesce same-type
same-location occurrences into per-second counted records, then write both
store views. Lines that match a pattern but carry an undecodable timestamp
or location are quarantined with a reason instead of being dropped, so every
input line is accounted for as matched-written, unmatched or quarantined.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Iterable, Optional

from ..errors import MalformedCaptureError, ParseError, RangeError
from ..model import ApplicationRun, EventRecord, ExitStatus, NodeLocation, parse_node_id
from ..store import EventStore
from .catalog import PatternCatalog


class LogSource(str, Enum):
    CONSOLE = "console"
    APPLICATION = "application"
    NETWORK = "network"


@dataclass(frozen=True)
class RawLine:
    source: LogSource
    received_ts: int
    text: str

    def __post_init__(self) -> None:
        if not self.text:
            raise ParseError("raw line text must be non-empty")


@dataclass
class ImportStats:
    lines_read: int = 0
    lines_matched: int = 0  # includes quarantined lines: they matched a pattern
    lines_unmatched: int = 0
    lines_quarantined: int = 0
    records_written: int = 0
    coalesced_away: int = 0
    apps_loaded: int = 0
    per_type: dict[str, int] = field(default_factory=dict)
    file_errors: dict[str, str] = field(default_factory=dict)

    def merge(self, other: "ImportStats") -> None:
        self.lines_read += other.lines_read
        self.lines_matched += other.lines_matched
        self.lines_unmatched += other.lines_unmatched
        self.lines_quarantined += other.lines_quarantined
        self.records_written += other.records_written
        self.coalesced_away += other.coalesced_away
        self.apps_loaded += other.apps_loaded
        for k, v in other.per_type.items():
            self.per_type[k] = self.per_type.get(k, 0) + v
        self.file_errors.update(other.file_errors)

    def as_dict(self) -> dict:
        return {
            "lines_read": self.lines_read,
            "lines_matched": self.lines_matched,
            "lines_unmatched": self.lines_unmatched,
            "lines_quarantined": self.lines_quarantined,
            "records_written": self.records_written,
            "coalesced_away": self.coalesced_away,
            "apps_loaded": self.apps_loaded,
            "per_type": dict(sorted(self.per_type.items())),
            "file_errors": dict(sorted(self.file_errors.items())),
        }


def parse_timestamp(text: str, fmt: str) -> int:
    """Capture text to ms UTC. Accepts the catalog format or raw epoch ms."""
    if text.isdigit():
        return int(text)
    try:
        dt = datetime.strptime(text, fmt).replace(tzinfo=timezone.utc)
    except ValueError as exc:
        raise MalformedCaptureError(f"bad timestamp {text!r}: {exc}") from exc
    # integer arithmetic: float timestamp() can land one ms short
    seconds = int(dt.replace(microsecond=0).timestamp())
    return seconds * 1000 + dt.microsecond // 1000


def parse_line(catalog: PatternCatalog, line: RawLine) -> Optional[EventRecord]:
    """First matching pattern in catalog order wins; None means unmatched."""
    for type_def in catalog.types:
        for pattern in type_def.patterns:
            m = pattern.search(line.text)
            if m is None:
                continue
            groups = m.groupdict()
            ts = parse_timestamp(groups["timestamp"], catalog.timestamp_format(line.source.value))
            try:
                location = parse_node_id(groups["location"])
            except (ParseError, RangeError) as exc:
                raise MalformedCaptureError(f"bad location {groups['location']!r}: {exc}") from exc
            attrs = {
                k: v for k, v in groups.items()
                if k not in ("timestamp", "location") and v is not None
            }
            return EventRecord(
                timestamp=ts,
                type_id=type_def.type_id,
                location=location,
                count=1,
                raw_message=line.text,
                attributes=attrs,
            )
    return None


def coalesce(batch: Iterable[EventRecord], window_ms: int = 1000) -> list[EventRecord]:
    """Merge occurrences of one (type, location) within one window into a
    single counted record.

    The merged record sits at the window start; its message and attributes
    come from the earliest member (ties broken by message text) so batch and
    streaming paths produce identical rows. Records differing in type or
    location never merge. Sum of counts is preserved.
    """
    groups: dict[tuple[str, bytes, int], list[EventRecord]] = {}
    for rec in batch:
        window = rec.timestamp - rec.timestamp % window_ms
        groups.setdefault((rec.type_id, rec.location.encode(), window), []).append(rec)
    out = []
    for (type_id, _loc, window), members in groups.items():
        first = min(members, key=lambda r: (r.timestamp, r.raw_message))
        out.append(
            EventRecord(
                timestamp=window,
                type_id=type_id,
                location=first.location,
                count=sum(r.count for r in members),
                raw_message=first.raw_message,
                attributes=first.attributes,
            )
        )
    out.sort(key=lambda r: r.sort_key())
    return out


def _source_for_file(path: str) -> LogSource:
    name = os.path.basename(path)
    for source in LogSource:
        if name.startswith(source.value):
            return source
    return LogSource.CONSOLE


@dataclass
class _FileResult:
    stats: ImportStats
    records: list[EventRecord]
    quarantined: list[tuple[str, str, str]]  # (file, reason, line)


def _parse_file(catalog: PatternCatalog, path: str) -> _FileResult:
    stats = ImportStats()
    records: list[EventRecord] = []
    quarantined: list[tuple[str, str, str]] = []
    source = _source_for_file(path)
    try:
        with open(path, errors="replace") as fh:
            for raw in fh:
                text = raw.rstrip("\n")
                if not text:
                    continue
                stats.lines_read += 1
                try:
                    record = parse_line(catalog, RawLine(source, 0, text))
                except MalformedCaptureError as exc:
                    stats.lines_matched += 1
                    stats.lines_quarantined += 1
                    quarantined.append((path, str(exc), text))
                    continue
                if record is None:
                    stats.lines_unmatched += 1
                else:
                    stats.lines_matched += 1
                    stats.per_type[record.type_id] = stats.per_type.get(record.type_id, 0) + 1
                    records.append(record)
    except OSError as exc:
        stats.file_errors[path] = str(exc)
    return _FileResult(stats, records, quarantined)


def batch_import(
    catalog: PatternCatalog,
    sources: list[str],
    store: EventStore,
    quarantine_path: Optional[str] = None,
    window_ms: int = 1000,
    max_workers: Optional[int] = None,
) -> ImportStats:
    """Parse and load a set of log files.

    Files parse in parallel; writes happen in one deterministic sorted pass
    so a fixed corpus always produces identical store contents.
    """
    total = ImportStats()
    results: list[_FileResult] = []
    ordered = sorted(sources)
    if ordered:
        with ThreadPoolExecutor(max_workers=max_workers or min(8, len(ordered))) as pool:
            results = list(pool.map(lambda p: _parse_file(catalog, p), ordered))
    for res in results:
        total.merge(res.stats)

    for type_def in catalog.types:
        store.register_type(
            type_def.type_id,
            type_def.display_name,
            type_def.category.value,
            type_def.severity.value,
        )
    merged: list[EventRecord] = []
    for res in results:
        merged.extend(res.records)
    out = coalesce(merged, window_ms=window_ms)
    for record in out:
        store.write_event(record)
    total.records_written = len(out)
    total.coalesced_away = len(merged) - len(out)

    quarantined = [q for res in results for q in res.quarantined]
    if quarantine_path and quarantined:
        with open(quarantine_path, "a") as fh:
            for file_path, reason, text in quarantined:
                fh.write(json.dumps({"file": file_path, "reason": reason, "line": text}) + "\n")
    return total


def parse_app_record(raw: dict) -> ApplicationRun:
    return ApplicationRun(
        job_id=str(raw["job_id"]),
        user=str(raw["user"]),
        app_name=str(raw["app_name"]),
        start_ts=int(raw["start_ts"]),
        end_ts=int(raw["end_ts"]),
        nodes=frozenset(parse_node_id(n) for n in raw["nodes"]),
        exit_status=ExitStatus(raw.get("exit_status", "unknown")),
    )


def load_apps_file(path: str, store: EventStore) -> int:
    """Load one application run per JSON line; returns number loaded."""
    loaded = 0
    with open(path) as fh:
        for raw in fh:
            raw = raw.strip()
            if not raw:
                continue
            store.write_application(parse_app_record(json.loads(raw)))
            loaded += 1
    return loaded


def import_directory(
    catalog: PatternCatalog,
    directory: str,
    store: EventStore,
    quarantine_path: Optional[str] = None,
    window_ms: int = 1000,
) -> ImportStats:
    """Import every *.log file plus an optional apps.jsonl from a directory."""
    logs = sorted(
        os.path.join(directory, n) for n in os.listdir(directory) if n.endswith(".log")
    )
    stats = batch_import(catalog, logs, store, quarantine_path, window_ms)
    apps = os.path.join(directory, "apps.jsonl")
    if os.path.exists(apps):
        stats.apps_loaded = load_apps_file(apps, store)
    return stats
