"""Core domain types: machine topology, locations, events, runs, contexts.

Everything in this module is immutable after construction and safe to share
between threads. Timestamps are integer milliseconds since the Unix epoch,
UTC; any local-time handling lives in the ingest layer.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Mapping, Optional

from .errors import ArgumentError, ParseError, RangeError

MS_PER_HOUR = 3_600_000

# Physical limits of the modeled machine class. A cabinet grid of 25 rows by
# 8 columns, three cages per cabinet, eight slots (blades) per cage and four
# nodes per slot: 25 * 8 * 3 * 8 * 4 = 19,200 addressable nodes.
MAX_ROWS = 25
MAX_COLS = 8
MAX_CAGES = 3
MAX_SLOTS = 8
MAX_NODES = 4


def hour_bucket(ts_ms: int) -> int:
    """Start of the UTC hour containing ``ts_ms``."""
    return ts_ms - ts_ms % MS_PER_HOUR


class Severity(str, Enum):
    INFO = "info"
    WARN = "warn"
    ERROR = "error"
    FATAL = "fatal"


class EventCategory(str, Enum):
    HARDWARE = "hardware"
    MEMORY = "memory"
    GPU = "gpu"
    FILESYSTEM = "filesystem"
    NETWORK = "network"
    SOFTWARE = "software"
    OTHER = "other"


class ExitStatus(str, Enum):
    SUCCESS = "success"
    FAILED = "failed"
    ABORTED = "aborted"
    UNKNOWN = "unknown"


@dataclass(frozen=True, order=True)
class NodeLocation:
    """Physical coordinates of one compute node."""

    cabinet_row: int
    cabinet_col: int
    cage: int
    slot: int
    node: int

    def __post_init__(self) -> None:
        bounds = (
            ("cabinet_row", self.cabinet_row, MAX_ROWS),
            ("cabinet_col", self.cabinet_col, MAX_COLS),
            ("cage", self.cage, MAX_CAGES),
            ("slot", self.slot, MAX_SLOTS),
            ("node", self.node, MAX_NODES),
        )
        for name, value, limit in bounds:
            if not isinstance(value, int) or not 0 <= value < limit:
                raise RangeError(f"{name}={value!r} outside 0..{limit - 1}")

    @property
    def cabinet(self) -> tuple[int, int]:
        return (self.cabinet_row, self.cabinet_col)

    def blade_id(self) -> str:
        """Blade (slot) level identifier, e.g. ``c3-10c1s4``."""
        return f"c{self.cabinet_col}-{self.cabinet_row}c{self.cage}s{self.slot}"

    def cabinet_id(self) -> str:
        return f"c{self.cabinet_col}-{self.cabinet_row}"

    def encode(self) -> bytes:
        return bytes((self.cabinet_row, self.cabinet_col, self.cage, self.slot, self.node))

    @classmethod
    def decode(cls, raw: bytes) -> "NodeLocation":
        if len(raw) != 5:
            raise ParseError(f"location encoding must be 5 bytes, got {len(raw)}")
        return cls(*raw)


@dataclass(frozen=True)
class Topology:
    """System layout counts. The default instance is the full 200-cabinet grid."""

    rows: int = MAX_ROWS
    cols: int = MAX_COLS
    cages_per_cabinet: int = MAX_CAGES
    slots_per_cage: int = MAX_SLOTS
    nodes_per_slot: int = MAX_NODES

    def __post_init__(self) -> None:
        limits = (
            ("rows", self.rows, MAX_ROWS),
            ("cols", self.cols, MAX_COLS),
            ("cages_per_cabinet", self.cages_per_cabinet, MAX_CAGES),
            ("slots_per_cage", self.slots_per_cage, MAX_SLOTS),
            ("nodes_per_slot", self.nodes_per_slot, MAX_NODES),
        )
        for name, value, limit in limits:
            if not isinstance(value, int) or not 1 <= value <= limit:
                raise RangeError(f"topology {name}={value!r} outside 1..{limit}")

    @property
    def total_nodes(self) -> int:
        return (
            self.rows
            * self.cols
            * self.cages_per_cabinet
            * self.slots_per_cage
            * self.nodes_per_slot
        )

    def contains(self, loc: NodeLocation) -> bool:
        return (
            loc.cabinet_row < self.rows
            and loc.cabinet_col < self.cols
            and loc.cage < self.cages_per_cabinet
            and loc.slot < self.slots_per_cage
            and loc.node < self.nodes_per_slot
        )


DEFAULT_TOPOLOGY = Topology()

# Canonical node id: c{col}-{row}c{cage}s{slot}n{node}
_NODE_ID_RE = re.compile(r"^c(\d+)-(\d+)c(\d+)s(\d+)n(\d+)$")
_PREFIX_RE = re.compile(r"^c(\d+)-(\d+)(?:c(\d+)(?:s(\d+)(?:n(\d+))?)?)?$")


def parse_node_id(text: str, topology: Topology = DEFAULT_TOPOLOGY) -> NodeLocation:
    """Parse a canonical node id such as ``c3-10c1s4n2``.

    Raises ParseError for malformed syntax and RangeError when a field falls
    outside the given topology.
    """
    m = _NODE_ID_RE.match(text)
    if m is None:
        raise ParseError(f"not a node id: {text!r}")
    col, row, cage, slot, node = (int(g) for g in m.groups())
    loc = NodeLocation(row, col, cage, slot, node)
    if not topology.contains(loc):
        raise RangeError(f"{text!r} outside topology {topology}")
    return loc


def format_node_id(loc: NodeLocation) -> str:
    """Inverse of parse_node_id."""
    return f"c{loc.cabinet_col}-{loc.cabinet_row}c{loc.cage}s{loc.slot}n{loc.node}"


def enumerate_nodes(topology: Topology = DEFAULT_TOPOLOGY) -> list[NodeLocation]:
    """All node locations in lexicographic (row, col, cage, slot, node) order."""
    return [
        NodeLocation(r, c, g, s, n)
        for r in range(topology.rows)
        for c in range(topology.cols)
        for g in range(topology.cages_per_cabinet)
        for s in range(topology.slots_per_cage)
        for n in range(topology.nodes_per_slot)
    ]


@dataclass(frozen=True)
class LocationSelector:
    """A node location or a coarser prefix of one (cabinet, cage or blade).

    Text forms: ``c0-0`` selects a cabinet, ``c0-0c1`` a cage, ``c0-0c1s2``
    a blade and ``c0-0c1s2n3`` a single node.
    """

    cabinet_row: int
    cabinet_col: int
    cage: Optional[int] = None
    slot: Optional[int] = None
    node: Optional[int] = None

    def __post_init__(self) -> None:
        if self.slot is not None and self.cage is None:
            raise ArgumentError("slot selector requires a cage")
        if self.node is not None and self.slot is None:
            raise ArgumentError("node selector requires a slot")

    @classmethod
    def parse(cls, text: str, topology: Topology = DEFAULT_TOPOLOGY) -> "LocationSelector":
        m = _PREFIX_RE.match(text)
        if m is None:
            raise ParseError(f"not a location selector: {text!r}")
        col, row = int(m.group(1)), int(m.group(2))
        cage = int(m.group(3)) if m.group(3) is not None else None
        slot = int(m.group(4)) if m.group(4) is not None else None
        node = int(m.group(5)) if m.group(5) is not None else None
        sel = cls(row, col, cage, slot, node)
        if not (row < topology.rows and col < topology.cols):
            raise RangeError(f"{text!r} outside topology")
        if cage is not None and cage >= topology.cages_per_cabinet:
            raise RangeError(f"{text!r} outside topology")
        if slot is not None and slot >= topology.slots_per_cage:
            raise RangeError(f"{text!r} outside topology")
        if node is not None and node >= topology.nodes_per_slot:
            raise RangeError(f"{text!r} outside topology")
        return sel

    @classmethod
    def for_node(cls, loc: NodeLocation) -> "LocationSelector":
        return cls(loc.cabinet_row, loc.cabinet_col, loc.cage, loc.slot, loc.node)

    @property
    def is_node(self) -> bool:
        return self.node is not None

    def as_node(self) -> NodeLocation:
        if not self.is_node:
            raise ArgumentError("selector is a prefix, not a node")
        return NodeLocation(self.cabinet_row, self.cabinet_col, self.cage, self.slot, self.node)

    def matches(self, loc: NodeLocation) -> bool:
        if (loc.cabinet_row, loc.cabinet_col) != (self.cabinet_row, self.cabinet_col):
            return False
        if self.cage is not None and loc.cage != self.cage:
            return False
        if self.slot is not None and loc.slot != self.slot:
            return False
        if self.node is not None and loc.node != self.node:
            return False
        return True

    def expand(self, topology: Topology = DEFAULT_TOPOLOGY) -> list[NodeLocation]:
        """All member node locations under this prefix within the topology."""
        cages = [self.cage] if self.cage is not None else range(topology.cages_per_cabinet)
        slots = [self.slot] if self.slot is not None else range(topology.slots_per_cage)
        nodes = [self.node] if self.node is not None else range(topology.nodes_per_slot)
        return [
            NodeLocation(self.cabinet_row, self.cabinet_col, g, s, n)
            for g in cages
            for s in slots
            for n in nodes
        ]

    def __str__(self) -> str:
        out = f"c{self.cabinet_col}-{self.cabinet_row}"
        if self.cage is not None:
            out += f"c{self.cage}"
        if self.slot is not None:
            out += f"s{self.slot}"
        if self.node is not None:
            out += f"n{self.node}"
        return out


@dataclass(frozen=True)
class EventTypeDef:
    """One monitored event type and the patterns that recognize it in raw logs."""

    type_id: str
    display_name: str
    category: EventCategory
    patterns: tuple[re.Pattern, ...]
    severity: Severity = Severity.ERROR

    def __post_init__(self) -> None:
        if not self.type_id:
            raise ArgumentError("type_id must be non-empty")
        if not self.patterns:
            raise ArgumentError(f"type {self.type_id}: patterns list is empty")
        for p in self.patterns:
            groups = p.groupindex
            if "timestamp" not in groups or "location" not in groups:
                raise ArgumentError(
                    f"type {self.type_id}: every pattern must capture timestamp and location"
                )


@dataclass(frozen=True, eq=False)
class EventRecord:
    """One (possibly coalesced) occurrence of a typed event at a node."""

    timestamp: int
    type_id: str
    location: NodeLocation
    count: int = 1
    raw_message: str = ""
    attributes: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.timestamp <= 0:
            raise ArgumentError(f"timestamp must be > 0, got {self.timestamp}")
        if self.count < 1:
            raise ArgumentError(f"count must be >= 1, got {self.count}")
        for key in self.attributes:
            if not key:
                raise ArgumentError("attribute keys must be non-empty")
        # normalize to a plain immutable-by-convention dict with stable order
        object.__setattr__(self, "attributes", dict(sorted(self.attributes.items())))

    def _value(self) -> tuple:
        return (
            self.timestamp,
            self.type_id,
            self.location,
            self.count,
            self.raw_message,
            tuple(self.attributes.items()),
        )

    def __eq__(self, other: object) -> bool:
        return isinstance(other, EventRecord) and self._value() == other._value()

    def __hash__(self) -> int:
        return hash(self._value())

    @property
    def hour(self) -> int:
        return hour_bucket(self.timestamp)

    def sort_key(self) -> tuple[int, str, bytes]:
        """Total clustering order: timestamp, then type, then location."""
        return (self.timestamp, self.type_id, self.location.encode())

    def identity(self) -> tuple[int, str, bytes]:
        """Coalescing identity; rows sharing it merge rather than duplicate."""
        return self.sort_key()


@dataclass(frozen=True)
class ApplicationRun:
    """A scheduled job: who ran what, where, and how it ended."""

    job_id: str
    user: str
    app_name: str
    start_ts: int
    end_ts: int
    nodes: frozenset[NodeLocation]
    exit_status: ExitStatus = ExitStatus.UNKNOWN

    def __post_init__(self) -> None:
        if not self.job_id:
            raise ArgumentError("job_id must be non-empty")
        if self.start_ts > self.end_ts:
            raise ArgumentError(f"run {self.job_id}: start_ts > end_ts")
        if not self.nodes:
            raise ArgumentError(f"run {self.job_id}: node set is empty")
        object.__setattr__(self, "nodes", frozenset(self.nodes))

    @property
    def effective_end(self) -> int:
        # zero-length runs occupy at least 1 ms so the time index can see them
        return max(self.end_ts, self.start_ts + 1)

    def active_at(self, ts: int) -> bool:
        return self.start_ts <= ts < self.effective_end

    def overlaps(self, start: int, end: int) -> bool:
        return self.start_ts < end and self.effective_end > start

    def cabinets(self) -> set[tuple[int, int]]:
        return {loc.cabinet for loc in self.nodes}

    def hour_buckets(self) -> list[int]:
        first = hour_bucket(self.start_ts)
        last = hour_bucket(self.effective_end - 1)
        return list(range(first, last + 1, MS_PER_HOUR))


@dataclass(frozen=True)
class TimeInterval:
    """Half-open interval [start_ts, end_ts) in ms UTC."""

    start_ts: int
    end_ts: int

    def __post_init__(self) -> None:
        if self.start_ts >= self.end_ts:
            raise ArgumentError(
                f"interval start must precede end, got [{self.start_ts}, {self.end_ts})"
            )

    @property
    def length_ms(self) -> int:
        return self.end_ts - self.start_ts

    def contains(self, ts: int) -> bool:
        return self.start_ts <= ts < self.end_ts

    def hour_buckets(self) -> Iterator[int]:
        """Hour bucket starts overlapping this interval, ascending."""
        h = hour_bucket(self.start_ts)
        while h < self.end_ts:
            yield h
            h += MS_PER_HOUR


@dataclass(frozen=True)
class Context:
    """The user's spatio-temporal filter driving every query.

    Absent optional sets mean "all": at minimum the interval constrains
    results. Location selectors may be full nodes or cabinet/blade prefixes;
    app selectors match either app_name or job_id.
    """

    interval: TimeInterval
    event_types: Optional[frozenset[str]] = None
    locations: Optional[frozenset[LocationSelector]] = None
    users: Optional[frozenset[str]] = None
    apps: Optional[frozenset[str]] = None

    def __post_init__(self) -> None:
        for name in ("event_types", "locations", "users", "apps"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, frozenset(value))

    def matches_location(self, loc: NodeLocation) -> bool:
        if self.locations is None:
            return True
        return any(sel.matches(loc) for sel in self.locations)

    def matches_event(self, record: EventRecord) -> bool:
        if not self.interval.contains(record.timestamp):
            return False
        if self.event_types is not None and record.type_id not in self.event_types:
            return False
        return self.matches_location(record.location)

    def matches_run(self, run: ApplicationRun) -> bool:
        if not run.overlaps(self.interval.start_ts, self.interval.end_ts):
            return False
        if self.users is not None and run.user not in self.users:
            return False
        if self.apps is not None and run.app_name not in self.apps and run.job_id not in self.apps:
            return False
        if self.locations is not None and not any(
            sel.matches(loc) for sel in self.locations for loc in run.nodes
        ):
            return False
        return True
