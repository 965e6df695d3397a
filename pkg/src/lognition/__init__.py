"""Desk-scale spatio-temporal log analytics for HPC-style systems."""

__version__ = "0.1.0"

from .model import (
    ApplicationRun,
    Context,
    EventRecord,
    EventTypeDef,
    LocationSelector,
    NodeLocation,
    TimeInterval,
    Topology,
    enumerate_nodes,
    format_node_id,
    parse_node_id,
)
from .ring import HashRing, RingConfig
from .store import EventStore

__all__ = [
    "ApplicationRun",
    "Context",
    "EventRecord",
    "EventStore",
    "EventTypeDef",
    "HashRing",
    "LocationSelector",
    "NodeLocation",
    "RingConfig",
    "TimeInterval",
    "Topology",
    "enumerate_nodes",
    "format_node_id",
    "parse_node_id",
    "__version__",
]
