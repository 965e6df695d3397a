"""Synthetic log generator with machine-readable ground truth.

Substitute for production log corpora: emits console-style lines matching
the default pattern catalog, an apps file, and a ground-truth record of
every planted phenomenon (hot node, type coupling, message flood) with
exact counts. Generation is deterministic for a fixed seed; each hour draws
from its own derived sub-seed so hours could be generated in parallel
without changing output.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import random
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

import yaml
from importlib import resources

from .errors import ArgumentError
from .model import (
    MS_PER_HOUR,
    LocationSelector,
    NodeLocation,
    format_node_id,
    parse_node_id,
)

USERS = ["asmith", "bjones", "clee", "dpatel", "eyang", "fgarcia"]
APP_NAMES = ["lammps", "gromacs", "vasp", "namd", "s3d", "xgc"]

_LUSTRE_TARGETS = ["ost%04x" % i for i in range(64)]
_LUSTRE_DETAILS = [
    "Connection to service was lost; in progress operations will fail",
    "operation ldlm_enqueue failed with -110",
    "client connection reconnecting",
    "bulk transfer timed out after retry",
]
_PANIC_REASONS = [
    "Attempted to kill init",
    "Fatal exception in interrupt",
    "Out of memory and no killable processes",
]
# every flood line carries the planted token; most carry it twice so the
# token outranks the shared type prefix in word counts
_FLOOD_TEMPLATES = [
    "LustreError: {tok}: object storage target is not responding",
    "LustreError: {tok}: Communicating with {tok} operation obd_ping failed",
    "LustreError: {tok}: Connection to {tok} was lost; in progress operations will wait",
    "LustreError: {tok}: service {tok} not connected",
]


@dataclass(frozen=True)
class HotNodeSpec:
    location: NodeLocation
    factor: float


@dataclass(frozen=True)
class CouplingSpec:
    type_a: str
    type_b: str
    lag_ms: int
    strength: float
    window_hours: tuple[float, float]

    def __post_init__(self) -> None:
        if not 0.0 <= self.strength <= 1.0:
            raise ArgumentError("coupling strength must be in [0, 1]")


@dataclass(frozen=True)
class FloodSpec:
    type_id: str
    token: str
    window_hours: tuple[float, float]
    volume: int


@dataclass(frozen=True)
class AppMixSpec:
    runs: int = 0
    min_nodes: int = 1
    max_nodes: int = 8
    failure_rate: float = 0.1

    def __post_init__(self) -> None:
        if not 0.0 <= self.failure_rate <= 1.0:
            raise ArgumentError("failure_rate must be in [0, 1]")


@dataclass(frozen=True)
class SynthSpec:
    seed: int
    start_ts: int
    duration_hours: int
    cabinets: tuple[tuple[int, int], ...]
    base_rates: dict[str, float]
    unmatched_line_fraction: float = 0.0
    hot_node: Optional[HotNodeSpec] = None
    coupling: Optional[CouplingSpec] = None
    flood: Optional[FloodSpec] = None
    apps: AppMixSpec = field(default_factory=AppMixSpec)

    def __post_init__(self) -> None:
        if self.duration_hours < 1:
            raise ArgumentError("duration_hours must be >= 1")
        if self.start_ts % MS_PER_HOUR:
            raise ArgumentError("start_ts must be hour aligned")
        if any(rate < 0 for rate in self.base_rates.values()):
            raise ArgumentError("base rates must be >= 0")
        if not 0.0 <= self.unmatched_line_fraction < 1.0:
            raise ArgumentError("unmatched_line_fraction must be in [0, 1)")

    @property
    def end_ts(self) -> int:
        return self.start_ts + self.duration_hours * MS_PER_HOUR


def load_spec(path: str) -> SynthSpec:
    with open(path) as fh:
        return spec_from_dict(yaml.safe_load(fh))


def demo_spec() -> SynthSpec:
    raw = resources.files("lognition").joinpath("data/demo_spec.yaml").read_text()
    return spec_from_dict(yaml.safe_load(raw))


def spec_from_dict(raw: dict) -> SynthSpec:
    phen = raw.get("phenomena", {}) or {}
    hot = None
    if "hot_node" in phen:
        h = phen["hot_node"]
        hot = HotNodeSpec(parse_node_id(h["location"]), float(h["factor"]))
    coupling = None
    if "coupling" in phen:
        c = phen["coupling"]
        coupling = CouplingSpec(
            c["type_a"], c["type_b"], int(c["lag_ms"]), float(c["strength"]),
            tuple(float(x) for x in c["window_hours"]),
        )
    flood = None
    if "flood" in phen:
        f = phen["flood"]
        flood = FloodSpec(
            f["type"], f["token"], tuple(float(x) for x in f["window_hours"]), int(f["volume"])
        )
    apps = AppMixSpec()
    if raw.get("apps"):
        a = raw["apps"]
        apps = AppMixSpec(
            runs=int(a.get("runs", 0)),
            min_nodes=int(a.get("min_nodes", 1)),
            max_nodes=int(a.get("max_nodes", 8)),
            failure_rate=float(a.get("failure_rate", 0.1)),
        )
    return SynthSpec(
        seed=int(raw["seed"]),
        start_ts=int(raw["start"]),
        duration_hours=int(raw["duration_hours"]),
        cabinets=tuple((int(r), int(c)) for r, c in raw["cabinets"]),
        base_rates={k: float(v) for k, v in raw["base_rates"].items()},
        unmatched_line_fraction=float(raw.get("unmatched_line_fraction", 0.0)),
        hot_node=hot,
        coupling=coupling,
        flood=flood,
        apps=apps,
    )


def _sub_rng(seed: int, label: str) -> random.Random:
    digest = hashlib.blake2b(f"{seed}:{label}".encode(), digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "big"))


def _poisson(rng: random.Random, lam: float) -> int:
    if lam <= 0:
        return 0
    limit = math.exp(-lam)
    k, p = 0, 1.0
    while True:
        p *= rng.random()
        if p <= limit:
            return k
        k += 1


def _format_ts(ts_ms: int) -> str:
    seconds, ms = divmod(ts_ms, 1000)
    dt = datetime.fromtimestamp(seconds, tz=timezone.utc)
    return dt.strftime("%Y-%m-%d %H:%M:%S") + f".{ms:03d}"


def _body(type_id: str, rng: random.Random) -> str:
    if type_id == "MCE":
        return (
            f"HWERR: Machine Check Exception bank {rng.randrange(8)} "
            f"status 0x{rng.randrange(1 << 32):08x}"
        )
    if type_id == "ECC":
        return (
            f"MemErr: corrected ECC error DIMM {rng.randrange(16)} "
            f"syndrome 0x{rng.randrange(1 << 16):04x}"
        )
    if type_id == "GPUXID":
        return f"GPUERR: Xid {rng.choice([13, 31, 43, 48, 62, 79])} on GPU 0"
    if type_id == "LustreError":
        return f"LustreError: {rng.choice(_LUSTRE_TARGETS)}: {rng.choice(_LUSTRE_DETAILS)}"
    if type_id == "LinkFailure":
        return f"HSN: link failure on port {rng.randrange(48)} lcb {rng.randrange(4)}"
    if type_id == "KernelPanic":
        return f"Kernel panic - not syncing: {rng.choice(_PANIC_REASONS)}"
    raise ArgumentError(f"no line template for type {type_id!r}")


def _nodes_for(spec: SynthSpec) -> list[NodeLocation]:
    nodes = []
    for row, col in spec.cabinets:
        nodes.extend(LocationSelector(row, col).expand())
    return nodes


def synth_generate(spec: SynthSpec, out_dir: str) -> dict:
    """Write hourly log files, apps.jsonl and ground_truth.json.

    Returns the ground truth dict. Output is byte-identical for a fixed
    spec: every random draw comes from a seed-derived sub-stream keyed by
    hour or by purpose.
    """
    os.makedirs(out_dir, exist_ok=True)
    nodes = _nodes_for(spec)
    hot = spec.hot_node
    lines: list[tuple[int, int, str]] = []  # (ts, dedup order, text)
    node_type_counts: dict[str, dict[str, int]] = {t: {} for t in spec.base_rates}
    per_type_lines = {t: 0 for t in spec.base_rates}
    order = 0

    def emit(ts: int, type_id: str, node: NodeLocation, body: str) -> None:
        nonlocal order
        lines.append((ts, order, f"{_format_ts(ts)} {format_node_id(node)} {body}"))
        order += 1
        per_type_lines[type_id] = per_type_lines.get(type_id, 0) + 1
        counts = node_type_counts.setdefault(type_id, {})
        cname = format_node_id(node)
        counts[cname] = counts.get(cname, 0) + 1

    coupling_window = None
    if spec.coupling:
        coupling_window = (
            spec.start_ts + int(spec.coupling.window_hours[0] * MS_PER_HOUR),
            spec.start_ts + int(spec.coupling.window_hours[1] * MS_PER_HOUR),
        )
    induced_pairs = 0

    for hour_idx in range(spec.duration_hours):
        rng = _sub_rng(spec.seed, f"hour-{hour_idx}")
        hour_start = spec.start_ts + hour_idx * MS_PER_HOUR
        for node in nodes:
            boost = hot.factor if hot and node == hot.location else 1.0
            for type_id, rate in spec.base_rates.items():
                for _ in range(_poisson(rng, rate * boost)):
                    ts = hour_start + rng.randrange(MS_PER_HOUR)
                    emit(ts, type_id, node, _body(type_id, rng))
                    if (
                        spec.coupling
                        and type_id == spec.coupling.type_a
                        and coupling_window[0] <= ts < coupling_window[1]
                        and rng.random() < spec.coupling.strength
                    ):
                        follow_ts = ts + spec.coupling.lag_ms
                        if follow_ts < spec.end_ts:
                            emit(follow_ts, spec.coupling.type_b, node,
                                 _body(spec.coupling.type_b, rng))
                            induced_pairs += 1

    flood_window = None
    token_occurrences = 0
    if spec.flood:
        rng = _sub_rng(spec.seed, "flood")
        flood_window = (
            spec.start_ts + int(spec.flood.window_hours[0] * MS_PER_HOUR),
            spec.start_ts + int(spec.flood.window_hours[1] * MS_PER_HOUR),
        )
        for _ in range(spec.flood.volume):
            ts = flood_window[0] + rng.randrange(flood_window[1] - flood_window[0])
            node = rng.choice(nodes)
            template = rng.choice(_FLOOD_TEMPLATES)
            body = template.format(tok=spec.flood.token)
            token_occurrences += template.count("{tok}")
            emit(ts, spec.flood.type_id, node, body)

    matched_lines = len(lines)
    junk_lines = 0
    if spec.unmatched_line_fraction > 0:
        rng = _sub_rng(spec.seed, "junk")
        frac = spec.unmatched_line_fraction
        junk_lines = round(matched_lines * frac / (1.0 - frac))
        for i in range(junk_lines):
            ts = spec.start_ts + rng.randrange(spec.duration_hours * MS_PER_HOUR)
            lines.append((ts, order, f"--- mark --- telemetry frame {i} ok"))
            order += 1

    lines.sort(key=lambda item: (item[0], item[1]))
    file_names = []
    for hour_idx in range(spec.duration_hours):
        hour_start = spec.start_ts + hour_idx * MS_PER_HOUR
        chunk = [t for ts, _, t in lines if hour_start <= ts < hour_start + MS_PER_HOUR]
        name = f"console-{hour_idx:03d}.log"
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write("\n".join(chunk))
            if chunk:
                fh.write("\n")
        file_names.append(name)

    runs = _generate_apps(spec, nodes)
    with open(os.path.join(out_dir, "apps.jsonl"), "w") as fh:
        for run in runs:
            fh.write(json.dumps(run, sort_keys=True) + "\n")

    hot_truth = None
    if hot:
        hot_cname = format_node_id(hot.location)
        others: dict[str, float] = {}
        for type_id, counts in node_type_counts.items():
            rest = [counts.get(format_node_id(n), 0) for n in nodes if n != hot.location]
            others[type_id] = sum(rest) / len(rest) if rest else 0.0
        hot_truth = {
            "location": hot_cname,
            "factor": hot.factor,
            "counts_by_type": {t: node_type_counts[t].get(hot_cname, 0) for t in spec.base_rates},
            "mean_other_nodes_by_type": others,
        }

    truth = {
        "version": 1,
        "seed": spec.seed,
        "start_ts": spec.start_ts,
        "end_ts": spec.end_ts,
        "cabinets": [list(c) for c in spec.cabinets],
        "node_count": len(nodes),
        "total_lines": matched_lines + junk_lines,
        "matched_lines": matched_lines,
        "unmatched_lines": junk_lines,
        "per_type_lines": dict(sorted(per_type_lines.items())),
        "node_type_counts": {t: dict(sorted(c.items())) for t, c in sorted(node_type_counts.items())},
        "hot_node": hot_truth,
        "coupling": None
        if not spec.coupling
        else {
            "type_a": spec.coupling.type_a,
            "type_b": spec.coupling.type_b,
            "lag_ms": spec.coupling.lag_ms,
            "strength": spec.coupling.strength,
            "window_ms": list(coupling_window),
            "induced_pairs": induced_pairs,
        },
        "flood": None
        if not spec.flood
        else {
            "type": spec.flood.type_id,
            "token": spec.flood.token,
            "window_ms": list(flood_window),
            "lines": spec.flood.volume,
            "token_occurrences": token_occurrences,
            "ubiquitous_term": "lustreerror",
        },
        "apps": {"count": len(runs), "job_ids": [r["job_id"] for r in runs]},
        "files": file_names,
    }
    with open(os.path.join(out_dir, "ground_truth.json"), "w") as fh:
        json.dump(truth, fh, indent=1, sort_keys=True)
    return truth


def _generate_apps(spec: SynthSpec, nodes: list[NodeLocation]) -> list[dict]:
    rng = _sub_rng(spec.seed, "apps")
    runs = []
    span = spec.duration_hours * MS_PER_HOUR
    for i in range(spec.apps.runs):
        size = rng.randint(spec.apps.min_nodes, min(spec.apps.max_nodes, len(nodes)))
        placement = rng.sample(nodes, size)
        start = spec.start_ts + rng.randrange(span)
        duration = rng.randrange(10 * 60_000, 6 * MS_PER_HOUR)
        end = min(start + duration, spec.end_ts)
        failed = rng.random() < spec.apps.failure_rate
        runs.append(
            {
                "job_id": f"job-{spec.seed}-{i:04d}",
                "user": rng.choice(USERS),
                "app_name": rng.choice(APP_NAMES),
                "start_ts": start,
                "end_ts": end,
                "nodes": sorted(format_node_id(n) for n in placement),
                "exit_status": "failed" if failed else "success",
            }
        )
    return runs
