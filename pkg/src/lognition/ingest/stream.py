"""Streaming consumption with tumbling one-second coalescing windows.

Each topic runs as one worker thread polling the bus in offset order. Event
occurrences accumulate into per-(window, type, location) counters; a window
is written out once the topic watermark passes its end, and any late update
rewrites the row upward. Because the store merges duplicate rows by max
count, at-least-once delivery and full replays converge to the same rows as
a batch import of the same events.
"""
from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass

from ..errors import MalformedCaptureError
from ..model import ApplicationRun, EventRecord, NodeLocation
from ..store import EventStore
from .bus import BusError, decode_payload
from .catalog import PatternCatalog
from .pipeline import RawLine, parse_line

log = logging.getLogger(__name__)


@dataclass
class _WindowState:
    count: int = 0
    first_ts: int = 0
    message: str = ""
    attributes: dict | None = None
    written: int = 0  # count already visible in the store


class StreamConsumer:
    """Handle over per-topic consumer threads. Stoppable and joinable."""

    def __init__(
        self,
        bus,
        topics: list[str],
        store: EventStore,
        catalog: PatternCatalog,
        window_ms: int = 1000,
        eviction_ms: int = 60_000,
        poll_timeout: float = 0.05,
        max_backoff: float = 5.0,
        start_offsets: dict[str, int] | None = None,
    ):
        self.bus = bus
        self.store = store
        self.catalog = catalog
        self.window_ms = window_ms
        self.eviction_ms = eviction_ms
        self.poll_timeout = poll_timeout
        self.max_backoff = max_backoff
        self._stop = threading.Event()
        self._offsets = {t: (start_offsets or {}).get(t, 0) for t in topics}
        self._offsets_lock = threading.Lock()
        self._unmatched = 0
        self._quarantined = 0
        for type_def in catalog.types:
            store.register_type(
                type_def.type_id,
                type_def.display_name,
                type_def.category.value,
                type_def.severity.value,
            )
        self._threads = [
            threading.Thread(target=self._run_topic, args=(t,), name=f"consume-{t}", daemon=True)
            for t in topics
        ]
        for t in self._threads:
            t.start()

    # -- public handle ---------------------------------------------------

    def offsets(self) -> dict[str, int]:
        with self._offsets_lock:
            return dict(self._offsets)

    @property
    def unmatched(self) -> int:
        return self._unmatched

    @property
    def quarantined(self) -> int:
        return self._quarantined

    def stop(self) -> None:
        self._stop.set()

    def join(self, timeout: float | None = None) -> None:
        for t in self._threads:
            t.join(timeout)

    def drain(self, timeout: float = 5.0) -> None:
        """Block until every topic has consumed up to its current end offset."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            with self._offsets_lock:
                done = all(
                    self._offsets[t] >= self.bus.end_offset(t) for t in self._offsets
                )
            if done:
                return
            time.sleep(0.01)

    # -- worker ------------------------------------------------------------

    def _run_topic(self, topic: str) -> None:
        windows: dict[tuple[int, str, bytes], _WindowState] = {}
        watermark = 0
        backoff = self.poll_timeout
        while not self._stop.is_set():
            offset = self._offsets[topic]
            try:
                messages = self.bus.poll(topic, offset, timeout=self.poll_timeout)
                backoff = self.poll_timeout
            except BusError as exc:
                log.warning("bus poll failed on %s: %s; retrying in %.2fs", topic, exc, backoff)
                self._stop.wait(backoff)
                backoff = min(backoff * 2, self.max_backoff)
                continue
            if not messages:
                continue
            if messages[0].offset > offset:
                log.warning(
                    "offset gap on %s: expected %d, got %d", topic, offset, messages[0].offset
                )
            for msg in messages:
                self._handle(topic, msg.payload, windows)
                with self._offsets_lock:
                    self._offsets[topic] = msg.offset + 1
            watermark = self._advance(windows, watermark)
        self._flush_all(windows)

    def _handle(self, topic: str, payload: bytes, windows: dict) -> None:
        try:
            item = decode_payload(payload)
        except Exception as exc:
            log.warning("undecodable message on %s: %s", topic, exc)
            self._quarantined += 1
            return
        if isinstance(item, ApplicationRun):
            self.store.write_application(item)
            return
        if isinstance(item, RawLine):
            try:
                record = parse_line(self.catalog, item)
            except MalformedCaptureError as exc:
                log.warning("quarantined line on %s: %s", topic, exc)
                self._quarantined += 1
                return
            if record is None:
                self._unmatched += 1
                return
            item = record
        self._accumulate(item, windows)

    def _accumulate(self, record: EventRecord, windows: dict) -> None:
        window = record.timestamp - record.timestamp % self.window_ms
        key = (window, record.type_id, record.location.encode())
        state = windows.get(key)
        if state is None:
            state = windows[key] = _WindowState(
                first_ts=record.timestamp,
                message=record.raw_message,
                attributes=dict(record.attributes),
            )
        state.count += record.count
        if (record.timestamp, record.raw_message) < (state.first_ts, state.message):
            state.first_ts = record.timestamp
            state.message = record.raw_message
            state.attributes = dict(record.attributes)
        if state.written:
            # late arrival after the window was flushed: rewrite upward now
            self._write(key, state)

    def _advance(self, windows: dict, watermark: int) -> int:
        newest = max((k[0] for k in windows), default=watermark)
        watermark = max(watermark, newest)
        for key in list(windows):
            window = key[0]
            state = windows[key]
            if window + self.window_ms <= watermark and not state.written:
                self._write(key, state)
            if window + self.window_ms + self.eviction_ms <= watermark and state.written:
                del windows[key]
        return watermark

    def _write(self, key: tuple[int, str, bytes], state: _WindowState) -> None:
        window, type_id, loc_bytes = key
        self.store.write_event(
            EventRecord(
                timestamp=window,
                type_id=type_id,
                location=NodeLocation.decode(loc_bytes),
                count=state.count,
                raw_message=state.message,
                attributes=state.attributes or {},
            )
        )
        state.written = state.count

    def _flush_all(self, windows: dict) -> None:
        for key, state in windows.items():
            if state.written != state.count:
                self._write(key, state)
