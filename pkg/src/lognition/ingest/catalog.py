"""Pattern catalog: what raw lines look like and how to read them.

A catalog is a versioned, ordered list of event type definitions plus
per-source timestamp formats and token filter lists. Catalog order is match
order: the first pattern that matches a line wins, so more specific patterns
belong earlier.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources

import yaml

from ..errors import ArgumentError
from ..model import EventCategory, EventTypeDef, Severity


@dataclass(frozen=True)
class PatternCatalog:
    types: tuple[EventTypeDef, ...]
    timestamp_formats: dict[str, str] = field(default_factory=dict)
    stopwords: frozenset[str] = frozenset()
    token_whitelist: frozenset[str] = frozenset()
    version: int = 1

    def __post_init__(self) -> None:
        seen = set()
        for t in self.types:
            if t.type_id in seen:
                raise ArgumentError(f"duplicate type_id {t.type_id!r} in catalog")
            seen.add(t.type_id)

    def type_ids(self) -> list[str]:
        return [t.type_id for t in self.types]

    def get(self, type_id: str) -> EventTypeDef | None:
        for t in self.types:
            if t.type_id == type_id:
                return t
        return None

    def timestamp_format(self, source: str) -> str:
        return self.timestamp_formats.get(source, "%Y-%m-%d %H:%M:%S.%f")


def _compile(type_id: str, pattern: str) -> re.Pattern:
    try:
        return re.compile(pattern)
    except re.error as exc:
        raise ArgumentError(f"type {type_id}: bad pattern {pattern!r}: {exc}") from exc


def catalog_from_dict(raw: dict) -> PatternCatalog:
    types = []
    for entry in raw.get("types", []):
        type_id = entry["id"]
        types.append(
            EventTypeDef(
                type_id=type_id,
                display_name=entry.get("name", type_id),
                category=EventCategory(entry.get("category", "other")),
                patterns=tuple(_compile(type_id, p) for p in entry.get("patterns", [])),
                severity=Severity(entry.get("severity", "error")),
            )
        )
    return PatternCatalog(
        types=tuple(types),
        timestamp_formats=dict(raw.get("timestamp_formats", {})),
        stopwords=frozenset(raw.get("stopwords", [])),
        token_whitelist=frozenset(raw.get("token_whitelist", [])),
        version=int(raw.get("version", 1)),
    )


def load_catalog(path: str) -> PatternCatalog:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ArgumentError(f"catalog file {path} is not a mapping")
    return catalog_from_dict(raw)


def default_catalog() -> PatternCatalog:
    raw = resources.files("lognition").joinpath("data/default_catalog.yaml").read_text()
    return catalog_from_dict(yaml.safe_load(raw))
