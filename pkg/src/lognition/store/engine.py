"""Embedded wide-column event store with ring placement and dual views.

Storage nodes are logical shards of a single process, so placement,
replication and balance behave like the real ring without a cluster. Each
write lands in every view that indexes it: events in event_by_time and
event_by_location, application runs in app_by_time, app_by_user and
app_by_location. Rows within a partition stay sorted by timestamp with a
(type, location) tie-break so scans are deterministic.

Durability is a per-shard append-only segment log plus a manifest; the
in-memory index is rebuilt by replaying segments in LSN order on open.
Concurrency: writes serialize per partition (plus a store lock for LSN and
disk appends), readers copy row slices under the partition lock, which gives
per-partition snapshot semantics without blocking writers.
"""
from __future__ import annotations

import bisect
import json
import os
import threading
from dataclasses import dataclass, field
from heapq import merge as heap_merge
from typing import Callable, Iterable, Iterator, Optional, Union

from ..errors import ArgumentError, UnknownTypeError
from ..model import (
    DEFAULT_TOPOLOGY,
    MS_PER_HOUR,
    ApplicationRun,
    EventRecord,
    LocationSelector,
    NodeLocation,
    TimeInterval,
    Topology,
    hour_bucket,
)
from ..ring import HashRing, RingConfig
from . import codec
from .keys import PartitionKey, Table

FORMAT_VERSION = 1
OP_TYPE = 3
DEFAULT_SEGMENT_BYTES = 64 * 1024 * 1024


@dataclass(frozen=True)
class TypeInfo:
    """Registered event type metadata kept by the store (patterns live in the catalog)."""

    type_id: str
    display_name: str = ""
    category: str = "other"
    severity: str = "error"


@dataclass(frozen=True)
class WriteReceipt:
    lsn: int
    partitions: tuple[PartitionKey, ...]
    replicas: tuple[tuple[int, ...], ...]
    merged: bool = False


@dataclass
class NodeStats:
    partitions: int = 0
    rows: int = 0
    bytes: int = 0


@dataclass
class StoreStats:
    per_node: dict[int, NodeStats]
    total_partitions: int
    total_rows: int
    total_bytes: int
    event_rows: int
    app_rows: int

    def as_dict(self) -> dict:
        return {
            "per_node": {
                str(n): {"partitions": s.partitions, "rows": s.rows, "bytes": s.bytes}
                for n, s in sorted(self.per_node.items())
            },
            "total_partitions": self.total_partitions,
            "total_rows": self.total_rows,
            "total_bytes": self.total_bytes,
            "event_rows": self.event_rows,
            "app_rows": self.app_rows,
        }


class _EventPartition:
    __slots__ = ("key", "rows", "lock", "bytes")

    def __init__(self, key: PartitionKey):
        self.key = key
        self.rows: list[EventRecord] = []
        self.lock = threading.Lock()
        self.bytes = 0

    def insert(self, record: EventRecord) -> tuple[bool, int]:
        """Idempotent insert; returns (merged, occurrence_delta)."""
        needle = record.sort_key()
        with self.lock:
            i = bisect.bisect_left(self.rows, needle, key=lambda r: r.sort_key())
            if i < len(self.rows) and self.rows[i].sort_key() == needle:
                old = self.rows[i]
                new_count = max(old.count, record.count)
                if new_count != old.count:
                    # first write wins for message/attributes, counts merge by max
                    self.rows[i] = EventRecord(
                        old.timestamp, old.type_id, old.location,
                        new_count, old.raw_message, old.attributes,
                    )
                return True, new_count - old.count
            self.rows.insert(i, record)
            self.bytes += len(codec.encode_event(record))
            return False, record.count

    def slice(self, start_ts: int, end_ts: int) -> list[EventRecord]:
        with self.lock:
            lo = bisect.bisect_left(self.rows, (start_ts,), key=lambda r: r.sort_key())
            hi = bisect.bisect_left(self.rows, (end_ts,), key=lambda r: r.sort_key())
            return self.rows[lo:hi]

    def snapshot(self) -> list[EventRecord]:
        with self.lock:
            return list(self.rows)


class _AppPartition:
    __slots__ = ("key", "rows", "lock", "bytes")

    def __init__(self, key: PartitionKey):
        self.key = key
        self.rows: list[ApplicationRun] = []
        self.lock = threading.Lock()
        self.bytes = 0

    def upsert(self, run: ApplicationRun) -> None:
        with self.lock:
            for i, existing in enumerate(self.rows):
                if existing.job_id == run.job_id:
                    self.bytes -= len(codec.encode_app(existing))
                    del self.rows[i]
                    break
            bisect.insort(self.rows, run, key=lambda r: (r.start_ts, r.job_id))
            self.bytes += len(codec.encode_app(run))

    def remove(self, job_id: str) -> None:
        with self.lock:
            for i, existing in enumerate(self.rows):
                if existing.job_id == job_id:
                    self.bytes -= len(codec.encode_app(existing))
                    del self.rows[i]
                    return

    def snapshot(self) -> list[ApplicationRun]:
        with self.lock:
            return list(self.rows)


class _Shard:
    """One logical storage node's on-disk state."""

    def __init__(self, root: str, node_id: int, max_segment_bytes: int):
        self.node_id = node_id
        self.dir = os.path.join(root, f"shard-{node_id:04d}")
        os.makedirs(self.dir, exist_ok=True)
        self.max_segment_bytes = max_segment_bytes
        self.offsets: dict[str, list[tuple[str, int]]] = {}
        existing = sorted(n for n in os.listdir(self.dir) if n.startswith("segment-"))
        self.segment_name = existing[-1] if existing else "segment-000001.log"
        self.fh = open(os.path.join(self.dir, self.segment_name), "ab")
        self._load_manifest()

    def _load_manifest(self) -> None:
        path = os.path.join(self.dir, "manifest.json")
        if os.path.exists(path):
            with open(path) as fh:
                raw = json.load(fh)
            self.offsets = {
                k: [(seg, off) for seg, off in entries]
                for k, entries in raw.get("partitions", {}).items()
            }

    def segments(self) -> list[str]:
        return sorted(n for n in os.listdir(self.dir) if n.startswith("segment-"))

    def append(self, op: int, lsn: int, body: bytes, key_hexes: Iterable[str]) -> None:
        if self.fh.tell() >= self.max_segment_bytes:
            self.fh.close()
            seq = int(self.segment_name[8:-4]) + 1
            self.segment_name = f"segment-{seq:06d}.log"
            self.fh = open(os.path.join(self.dir, self.segment_name), "ab")
        offset = codec.write_frame(self.fh, op, lsn, body)
        for key_hex in key_hexes:
            self.offsets.setdefault(key_hex, []).append((self.segment_name, offset))

    def flush(self) -> None:
        self.fh.flush()
        os.fsync(self.fh.fileno())
        manifest = {
            "format_version": FORMAT_VERSION,
            "partitions": {k: self.offsets[k] for k in sorted(self.offsets)},
        }
        tmp = os.path.join(self.dir, "manifest.json.tmp")
        with open(tmp, "w") as fh:
            json.dump(manifest, fh, sort_keys=True, separators=(",", ":"))
        os.replace(tmp, os.path.join(self.dir, "manifest.json"))

    def close(self) -> None:
        self.flush()
        self.fh.close()


class EventStore:
    """The embedded store. Pass ``path=None`` for an ephemeral in-memory store."""

    def __init__(
        self,
        path: Optional[str] = None,
        ring: Optional[RingConfig] = None,
        topology: Optional[Topology] = None,
        max_segment_bytes: int = DEFAULT_SEGMENT_BYTES,
    ):
        self._lock = threading.RLock()
        self._event_parts: dict[PartitionKey, _EventPartition] = {}
        self._app_parts: dict[PartitionKey, _AppPartition] = {}
        self._types: dict[str, TypeInfo] = {}
        self._jobs: dict[str, ApplicationRun] = {}
        self._synopsis: dict[tuple[str, int], int] = {}
        self._listeners: list[Callable[[EventRecord], None]] = []
        self._lsn = 0
        self._scan_local = threading.local()
        self.path = path
        self._shards: list[_Shard] = []

        if path is not None:
            meta_path = os.path.join(path, "meta.json")
            if os.path.exists(meta_path):
                with open(meta_path) as fh:
                    meta = json.load(fh)
                stored_ring = RingConfig(**meta["ring"])
                stored_topo = Topology(**meta["topology"])
                if ring is not None and ring != stored_ring:
                    raise ArgumentError("ring config conflicts with existing store")
                if topology is not None and topology != stored_topo:
                    raise ArgumentError("topology conflicts with existing store")
                ring, topology = stored_ring, stored_topo
        self.ring_config = ring or RingConfig()
        self.topology = topology or DEFAULT_TOPOLOGY
        self._ring = HashRing(self.ring_config)

        if path is not None:
            os.makedirs(path, exist_ok=True)
            self._write_meta()
            self._shards = [
                _Shard(path, n, max_segment_bytes)
                for n in range(self.ring_config.storage_nodes)
            ]
            self._replay()

    # -- lifecycle -----------------------------------------------------------

    def _write_meta(self) -> None:
        meta = {
            "format_version": FORMAT_VERSION,
            "ring": {
                "storage_nodes": self.ring_config.storage_nodes,
                "vnodes_per_node": self.ring_config.vnodes_per_node,
                "replication_factor": self.ring_config.replication_factor,
                "hash_name": self.ring_config.hash_name,
            },
            "topology": {
                "rows": self.topology.rows,
                "cols": self.topology.cols,
                "cages_per_cabinet": self.topology.cages_per_cabinet,
                "slots_per_cage": self.topology.slots_per_cage,
                "nodes_per_slot": self.topology.nodes_per_slot,
            },
        }
        tmp = os.path.join(self.path, "meta.json.tmp")
        with open(tmp, "w") as fh:
            json.dump(meta, fh, sort_keys=True, indent=1)
        os.replace(tmp, os.path.join(self.path, "meta.json"))

    def _replay(self) -> None:
        entries: dict[int, tuple[int, bytes]] = {}
        for shard in self._shards:
            for name in shard.segments():
                with open(os.path.join(shard.dir, name), "rb") as fh:
                    for _offset, op, lsn, body in codec.read_frames(fh):
                        entries.setdefault(lsn, (op, body))
        for lsn in sorted(entries):
            op, body = entries[lsn]
            if op == codec.OP_EVENT:
                self._apply_event(codec.decode_event(body))
            elif op == codec.OP_APP:
                self._apply_app(codec.decode_app(body))
            elif op == OP_TYPE:
                info = TypeInfo(**json.loads(body))
                self._types[info.type_id] = info
        if entries:
            self._lsn = max(entries) + 1

    def flush(self) -> None:
        with self._lock:
            for shard in self._shards:
                shard.flush()

    def close(self) -> None:
        with self._lock:
            for shard in self._shards:
                shard.close()
            self._shards = []

    def __enter__(self) -> "EventStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- type registry -------------------------------------------------------

    def register_type(
        self,
        type_id: str,
        display_name: str = "",
        category: str = "other",
        severity: str = "error",
    ) -> None:
        info = TypeInfo(type_id, display_name, category, severity)
        with self._lock:
            if self._types.get(type_id) == info:
                return
            self._types[type_id] = info
            if self._shards:
                lsn = self._next_lsn()
                body = json.dumps(info.__dict__, sort_keys=True).encode()
                self._shards[0].append(OP_TYPE, lsn, body, [])

    def is_registered(self, type_id: str) -> bool:
        return type_id in self._types

    def types(self) -> list[TypeInfo]:
        with self._lock:
            return sorted(self._types.values(), key=lambda t: t.type_id)

    def _require_type(self, type_id: str) -> None:
        if type_id not in self._types:
            raise UnknownTypeError(f"event type {type_id!r} is not registered")

    # -- write paths ---------------------------------------------------------

    def _next_lsn(self) -> int:
        lsn = self._lsn
        self._lsn += 1
        return lsn

    def _event_partition(self, key: PartitionKey) -> _EventPartition:
        part = self._event_parts.get(key)
        if part is None:
            part = self._event_parts[key] = _EventPartition(key)
        return part

    def _app_partition(self, key: PartitionKey) -> _AppPartition:
        part = self._app_parts.get(key)
        if part is None:
            part = self._app_parts[key] = _AppPartition(key)
        return part

    def write_event(self, record: EventRecord) -> WriteReceipt:
        self._require_type(record.type_id)
        hour = record.hour
        kt = PartitionKey.event_by_time(hour, record.type_id)
        kl = PartitionKey.event_by_location(hour, record.location)
        with self._lock:
            lsn = self._next_lsn()
            reps_t = tuple(self._ring.locate(kt.encode()))
            reps_l = tuple(self._ring.locate(kl.encode()))
            if self._shards:
                body = codec.encode_event(record)
                hex_t, hex_l = kt.encode().hex(), kl.encode().hex()
                for node in sorted(set(reps_t) | set(reps_l)):
                    keys = [h for h, reps in ((hex_t, reps_t), (hex_l, reps_l)) if node in reps]
                    self._shards[node].append(codec.OP_EVENT, lsn, body, keys)
            pt = self._event_partition(kt)
            pl = self._event_partition(kl)
        merged, delta = pt.insert(record)
        pl.insert(record)
        if delta:
            with self._lock:
                syn = (record.type_id, hour)
                self._synopsis[syn] = self._synopsis.get(syn, 0) + delta
        for listener in list(self._listeners):
            listener(record)
        return WriteReceipt(lsn, (kt, kl), (reps_t, reps_l), merged)

    def _apply_event(self, record: EventRecord) -> None:
        # replay path: in-memory apply without re-appending to segments
        if record.type_id not in self._types:
            self._types[record.type_id] = TypeInfo(record.type_id)
        hour = record.hour
        kt = PartitionKey.event_by_time(hour, record.type_id)
        kl = PartitionKey.event_by_location(hour, record.location)
        _, delta = self._event_partition(kt).insert(record)
        self._event_partition(kl).insert(record)
        if delta:
            syn = (record.type_id, hour)
            self._synopsis[syn] = self._synopsis.get(syn, 0) + delta

    def _run_keys(self, run: ApplicationRun) -> list[PartitionKey]:
        keys = [PartitionKey.app_by_time(h) for h in run.hour_buckets()]
        keys.append(PartitionKey.app_by_user(run.user))
        keys.extend(
            PartitionKey.app_by_location(h, cab)
            for h in run.hour_buckets()
            for cab in sorted(run.cabinets())
        )
        return keys

    def write_application(self, run: ApplicationRun) -> WriteReceipt:
        with self._lock:
            lsn = self._next_lsn()
            replaced = self._jobs.get(run.job_id)
            if replaced is not None:
                for key in self._run_keys(replaced):
                    part = self._app_parts.get(key)
                    if part is not None:
                        part.remove(run.job_id)
            keys = self._run_keys(run)
            replica_sets = tuple(tuple(self._ring.locate(k.encode())) for k in keys)
            if self._shards:
                body = codec.encode_app(run)
                per_node: dict[int, list[str]] = {}
                for key, reps in zip(keys, replica_sets):
                    for node in reps:
                        per_node.setdefault(node, []).append(key.encode().hex())
                for node in sorted(per_node):
                    self._shards[node].append(codec.OP_APP, lsn, body, per_node[node])
            for key in keys:
                self._app_partition(key).upsert(run)
            self._jobs[run.job_id] = run
        return WriteReceipt(lsn, tuple(keys), replica_sets, merged=replaced is not None)

    def _apply_app(self, run: ApplicationRun) -> None:
        replaced = self._jobs.get(run.job_id)
        if replaced is not None:
            for key in self._run_keys(replaced):
                part = self._app_parts.get(key)
                if part is not None:
                    part.remove(run.job_id)
        for key in self._run_keys(run):
            self._app_partition(key).upsert(run)
        self._jobs[run.job_id] = run

    # -- read paths ----------------------------------------------------------

    def _note_scan(self, touched: int) -> None:
        self._scan_local.partitions = touched

    @property
    def last_scan_partitions(self) -> int:
        """Partitions touched by the most recent scan on this thread."""
        return getattr(self._scan_local, "partitions", 0)

    def scan_events_by_type(self, type_id: str, interval: TimeInterval) -> list[EventRecord]:
        self._require_type(type_id)
        out: list[EventRecord] = []
        touched = 0
        for hour in interval.hour_buckets():
            part = self._event_parts.get(PartitionKey.event_by_time(hour, type_id))
            if part is not None:
                touched += 1
                out.extend(part.slice(interval.start_ts, interval.end_ts))
        self._note_scan(touched)
        return out

    def scan_events_by_location(
        self,
        location: Union[NodeLocation, LocationSelector],
        interval: TimeInterval,
    ) -> list[EventRecord]:
        if isinstance(location, LocationSelector):
            nodes = location.expand(self.topology) if not location.is_node else [location.as_node()]
        else:
            nodes = [location]
        touched = 0
        streams: list[list[EventRecord]] = []
        for node in nodes:
            rows: list[EventRecord] = []
            for hour in interval.hour_buckets():
                part = self._event_parts.get(PartitionKey.event_by_location(hour, node))
                if part is not None:
                    touched += 1
                    rows.extend(part.slice(interval.start_ts, interval.end_ts))
            if rows:
                streams.append(rows)
        self._note_scan(touched)
        if len(streams) == 1:
            return streams[0]
        return list(heap_merge(*streams, key=lambda r: r.sort_key()))

    def scan_apps(
        self,
        interval: Optional[TimeInterval] = None,
        user: Optional[str] = None,
        app_name: Optional[str] = None,
        location: Optional[Union[NodeLocation, LocationSelector]] = None,
    ) -> set[ApplicationRun]:
        selectors = [s is not None for s in (interval, user, app_name)]
        if location is not None and interval is None:
            raise ArgumentError("location selector requires an interval")
        if location is None and sum(selectors) != 1:
            raise ArgumentError("exactly one selector required")

        if user is not None:
            part = self._app_parts.get(PartitionKey.app_by_user(user))
            return set(part.snapshot()) if part is not None else set()
        if app_name is not None:
            with self._lock:
                return {r for r in self._jobs.values() if r.app_name == app_name}
        if location is not None:
            sel = location if isinstance(location, LocationSelector) else LocationSelector.for_node(location)
            cabinets = {(sel.cabinet_row, sel.cabinet_col)}
            out: set[ApplicationRun] = set()
            for hour in interval.hour_buckets():
                for cab in cabinets:
                    part = self._app_parts.get(PartitionKey.app_by_location(hour, cab))
                    if part is None:
                        continue
                    for run in part.snapshot():
                        if run.overlaps(interval.start_ts, interval.end_ts) and any(
                            sel.matches(loc) for loc in run.nodes
                        ):
                            out.add(run)
            return out
        out = set()
        for hour in interval.hour_buckets():
            part = self._app_parts.get(PartitionKey.app_by_time(hour))
            if part is None:
                continue
            for run in part.snapshot():
                if run.overlaps(interval.start_ts, interval.end_ts):
                    out.add(run)
        return out

    def all_events(self) -> Iterator[EventRecord]:
        """Every stored event via the time view, unordered across partitions."""
        with self._lock:
            parts = [p for k, p in self._event_parts.items() if k.table is Table.EVENT_BY_TIME]
        for part in parts:
            yield from part.snapshot()

    def all_runs(self) -> list[ApplicationRun]:
        with self._lock:
            return list(self._jobs.values())

    def partition_keys(self, table: Table) -> list[PartitionKey]:
        with self._lock:
            if table in (Table.EVENT_BY_TIME, Table.EVENT_BY_LOCATION):
                return [k for k in self._event_parts if k.table is table]
            return [k for k in self._app_parts if k.table is table]

    def partition_rows(self, key: PartitionKey) -> list:
        part = self._event_parts.get(key) or self._app_parts.get(key)
        return part.snapshot() if part is not None else []

    def synopsis(self) -> dict[tuple[str, int], int]:
        """Per-(type, hour) occurrence counts, derived and kept current on write."""
        with self._lock:
            return dict(self._synopsis)

    def locate(self, key: PartitionKey) -> list[int]:
        return self._ring.locate(key.encode())

    # -- stream hooks and stats ----------------------------------------------

    def add_listener(self, fn: Callable[[EventRecord], None]) -> None:
        self._listeners.append(fn)

    def remove_listener(self, fn: Callable[[EventRecord], None]) -> None:
        if fn in self._listeners:
            self._listeners.remove(fn)

    def store_stats(self) -> StoreStats:
        per_node = {n: NodeStats() for n in range(self.ring_config.storage_nodes)}
        event_rows = 0
        app_rows = 0
        with self._lock:
            event_parts = list(self._event_parts.items())
            app_parts = list(self._app_parts.items())
        for key, part in event_parts:
            with part.lock:
                n_rows, n_bytes = len(part.rows), part.bytes
            event_rows += n_rows
            for node in self._ring.locate(key.encode()):
                stats = per_node[node]
                stats.partitions += 1
                stats.rows += n_rows
                stats.bytes += n_bytes
        for key, part in app_parts:
            with part.lock:
                n_rows, n_bytes = len(part.rows), part.bytes
            app_rows += n_rows
            for node in self._ring.locate(key.encode()):
                stats = per_node[node]
                stats.partitions += 1
                stats.rows += n_rows
                stats.bytes += n_bytes
        return StoreStats(
            per_node=per_node,
            total_partitions=sum(s.partitions for s in per_node.values()),
            total_rows=sum(s.rows for s in per_node.values()),
            total_bytes=sum(s.bytes for s in per_node.values()),
            event_rows=event_rows,
            app_rows=app_rows,
        )
