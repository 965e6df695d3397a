"""Partition identities for the five denormalized views.

Events land in two views (by time+type and by time+location); application
runs land in three (by time, by user, by time+cabinet). A key's canonical
byte encoding is a fixed-order concatenation of a variant tag and its
fields, so ring placement is a pure function of the key.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional

from ..errors import ArgumentError
from ..model import MS_PER_HOUR, NodeLocation


class Table(IntEnum):
    EVENT_BY_TIME = 1
    EVENT_BY_LOCATION = 2
    APP_BY_TIME = 3
    APP_BY_USER = 4
    APP_BY_LOCATION = 5


@dataclass(frozen=True)
class PartitionKey:
    table: Table
    hour: Optional[int] = None
    type_id: Optional[str] = None
    location: Optional[NodeLocation] = None
    cabinet: Optional[tuple[int, int]] = None
    user: Optional[str] = None

    def __post_init__(self) -> None:
        if self.hour is not None and self.hour % MS_PER_HOUR != 0:
            raise ArgumentError(f"hour {self.hour} not aligned to {MS_PER_HOUR} ms")

    @classmethod
    def event_by_time(cls, hour: int, type_id: str) -> "PartitionKey":
        return cls(Table.EVENT_BY_TIME, hour=hour, type_id=type_id)

    @classmethod
    def event_by_location(cls, hour: int, location: NodeLocation) -> "PartitionKey":
        return cls(Table.EVENT_BY_LOCATION, hour=hour, location=location)

    @classmethod
    def app_by_time(cls, hour: int) -> "PartitionKey":
        return cls(Table.APP_BY_TIME, hour=hour)

    @classmethod
    def app_by_user(cls, user: str) -> "PartitionKey":
        return cls(Table.APP_BY_USER, user=user)

    @classmethod
    def app_by_location(cls, hour: int, cabinet: tuple[int, int]) -> "PartitionKey":
        return cls(Table.APP_BY_LOCATION, hour=hour, cabinet=cabinet)

    def encode(self) -> bytes:
        """Deterministic canonical encoding: tag byte then fields in fixed order."""
        out = bytearray([int(self.table)])
        if self.table is Table.EVENT_BY_TIME:
            out += struct.pack("<Q", self.hour)
            out += _utf8(self.type_id)
        elif self.table is Table.EVENT_BY_LOCATION:
            out += struct.pack("<Q", self.hour)
            out += self.location.encode()
        elif self.table is Table.APP_BY_TIME:
            out += struct.pack("<Q", self.hour)
        elif self.table is Table.APP_BY_USER:
            out += _utf8(self.user)
        elif self.table is Table.APP_BY_LOCATION:
            out += struct.pack("<Q", self.hour)
            out += bytes(self.cabinet)
        return bytes(out)


def _utf8(text: str) -> bytes:
    raw = text.encode("utf-8")
    return struct.pack("<H", len(raw)) + raw
