"""Service configuration: YAML file plus LOGNITION_* environment overrides."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

import yaml

from ..errors import ArgumentError
from ..model import DEFAULT_TOPOLOGY, Topology
from ..ring import RingConfig

ENV_PREFIX = "LOGNITION_"


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    store_path: Optional[str] = None  # None: ephemeral in-memory store
    catalog_path: Optional[str] = None  # None: packaged default catalog
    ring: RingConfig = field(default_factory=RingConfig)
    topology: Topology = DEFAULT_TOPOLOGY
    event_limit: int = 50_000
    stream_buffer: int = 10_000
    heartbeat_seconds: float = 15.0
    tail: dict[str, str] = field(default_factory=dict)  # bus topic -> file to follow
    static_dir: Optional[str] = None  # serve UI assets at /ui when set


def _env(name: str) -> Optional[str]:
    return os.environ.get(ENV_PREFIX + name)


def load_config(path: Optional[str] = None) -> ServiceConfig:
    raw: dict = {}
    if path is not None:
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ArgumentError(f"config file {path} is not a mapping")

    cfg = ServiceConfig()
    cfg.host = raw.get("host", cfg.host)
    cfg.port = int(raw.get("port", cfg.port))
    cfg.store_path = raw.get("store_path", cfg.store_path)
    cfg.catalog_path = raw.get("catalog", cfg.catalog_path)
    if "ring" in raw:
        cfg.ring = RingConfig(**raw["ring"])
    if "topology" in raw:
        cfg.topology = Topology(**raw["topology"])
    limits = raw.get("limits", {})
    cfg.event_limit = int(limits.get("event_limit", cfg.event_limit))
    cfg.stream_buffer = int(limits.get("stream_buffer", cfg.stream_buffer))
    cfg.heartbeat_seconds = float(raw.get("heartbeat_seconds", cfg.heartbeat_seconds))
    cfg.tail = {str(k): str(v) for k, v in (raw.get("tail") or {}).items()}
    cfg.static_dir = raw.get("static_dir", cfg.static_dir)

    if _env("HOST"):
        cfg.host = _env("HOST")
    if _env("PORT"):
        cfg.port = int(_env("PORT"))
    if _env("STORE_PATH"):
        cfg.store_path = _env("STORE_PATH")
    if _env("CATALOG"):
        cfg.catalog_path = _env("CATALOG")
    if _env("EVENT_LIMIT"):
        cfg.event_limit = int(_env("EVENT_LIMIT"))
    if _env("STREAM_BUFFER"):
        cfg.stream_buffer = int(_env("STREAM_BUFFER"))
    if _env("HEARTBEAT_SECONDS"):
        cfg.heartbeat_seconds = float(_env("HEARTBEAT_SECONDS"))
    if _env("STATIC_DIR"):
        cfg.static_dir = _env("STATIC_DIR")
    return cfg
