"""Pluggable message bus: an in-process queue for tests and a file tailer
for demos. A real broker client can slot in behind the same poll interface
without touching consumers.

Payloads are tagged bytes: 0 = raw line (JSON), 1 = event record (binary
codec), 2 = application run (binary codec).
"""
from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from typing import Optional, Union

from ..errors import ParseError
from ..model import ApplicationRun, EventRecord
from ..store import codec
from .pipeline import LogSource, RawLine

KIND_RAW_LINE = 0
KIND_EVENT = 1
KIND_APP = 2


@dataclass(frozen=True)
class BusMessage:
    topic: str
    payload: bytes
    offset: int


def encode_raw_line(line: RawLine) -> bytes:
    body = json.dumps(
        {"source": line.source.value, "received_ts": line.received_ts, "text": line.text}
    ).encode()
    return bytes([KIND_RAW_LINE]) + body


def encode_event(record: EventRecord) -> bytes:
    return bytes([KIND_EVENT]) + codec.encode_event(record)


def encode_app(run: ApplicationRun) -> bytes:
    return bytes([KIND_APP]) + codec.encode_app(run)


def decode_payload(payload: bytes) -> Union[RawLine, EventRecord, ApplicationRun]:
    if not payload:
        raise ParseError("empty bus payload")
    kind, body = payload[0], payload[1:]
    if kind == KIND_RAW_LINE:
        raw = json.loads(body)
        return RawLine(LogSource(raw["source"]), int(raw["received_ts"]), raw["text"])
    if kind == KIND_EVENT:
        return codec.decode_event(body)
    if kind == KIND_APP:
        return codec.decode_app(body)
    raise ParseError(f"unknown payload kind {kind}")


class BusError(Exception):
    """Transient bus failure; consumers retry with backoff."""


class InProcessBus:
    """Thread-safe topic logs with strictly increasing offsets."""

    def __init__(self):
        self._topics: dict[str, list[BusMessage]] = {}
        self._lock = threading.Lock()
        self._new_data = threading.Condition(self._lock)

    def publish(self, topic: str, payload: bytes) -> int:
        with self._new_data:
            log = self._topics.setdefault(topic, [])
            msg = BusMessage(topic, payload, len(log))
            log.append(msg)
            self._new_data.notify_all()
            return msg.offset

    def poll(self, topic: str, offset: int, max_messages: int = 500, timeout: float = 0.0) -> list[BusMessage]:
        with self._new_data:
            log = self._topics.get(topic, [])
            if offset >= len(log) and timeout > 0:
                self._new_data.wait(timeout)
                log = self._topics.get(topic, [])
            return log[offset : offset + max_messages]

    def end_offset(self, topic: str) -> int:
        with self._lock:
            return len(self._topics.get(topic, []))

    def topics(self) -> list[str]:
        with self._lock:
            return sorted(self._topics)


class FileTailBus:
    """Follows growing text files, one per topic; each appended line becomes
    a raw-line message. Offsets are line indexes from the start of the file,
    so replay from 0 is always possible while the file exists.
    """

    def __init__(self, paths: dict[str, str], source: LogSource = LogSource.CONSOLE):
        self._paths = dict(paths)
        self._source = source
        self._positions: dict[str, tuple[int, int]] = {}  # topic -> (line_idx, byte_pos)
        self._lock = threading.Lock()

    def poll(self, topic: str, offset: int, max_messages: int = 500, timeout: float = 0.0) -> list[BusMessage]:
        path = self._paths.get(topic)
        if path is None:
            raise BusError(f"unknown topic {topic!r}")
        try:
            out: list[BusMessage] = []
            with self._lock:
                line_idx, byte_pos = self._positions.get(topic, (0, 0))
                if offset < line_idx:
                    line_idx, byte_pos = 0, 0  # replay from scratch
                with open(path, "rb") as fh:
                    fh.seek(byte_pos)
                    while len(out) < max_messages:
                        pos = fh.tell()
                        raw = fh.readline()
                        if not raw.endswith(b"\n"):
                            break  # partial tail line still being written
                        text = raw.decode(errors="replace").rstrip("\n")
                        if line_idx >= offset and text:
                            out.append(
                                BusMessage(
                                    topic,
                                    encode_raw_line(RawLine(self._source, 0, text)),
                                    line_idx,
                                )
                            )
                        line_idx += 1
                        byte_pos = fh.tell() if raw.endswith(b"\n") else pos
                    self._positions[topic] = (line_idx, byte_pos)
            return out
        except OSError as exc:
            raise BusError(str(exc)) from exc

    def end_offset(self, topic: str) -> int:
        # counted lazily; callers normally track their own offsets
        path = self._paths.get(topic)
        if path is None or not os.path.exists(path):
            return 0
        with open(path, "rb") as fh:
            return sum(1 for _ in fh)

    def topics(self) -> list[str]:
        return sorted(self._paths)
