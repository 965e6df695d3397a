"""Server-push channel for newly written events.

The hub receives records from store listener callbacks (any writer thread),
keeps a bounded ring of frames for the long-polling fallback, and fans out
to per-connection asyncio queues for the push channel. Each connection gets
its own gap-free frame sequence; a consumer that falls more than the buffer
limit behind is disconnected with an overflow frame.
"""
from __future__ import annotations

import asyncio
import json
import threading
from collections import deque
from dataclasses import dataclass
from typing import Optional

from ..model import EventRecord
from .schemas import event_json


@dataclass(frozen=True)
class Frame:
    seq: int
    events: tuple[EventRecord, ...]


class _Subscription:
    def __init__(self, hub: "StreamHub", types: Optional[frozenset[str]], buffer: int):
        self.hub = hub
        self.types = types
        self.buffer = buffer
        self.queue: asyncio.Queue = asyncio.Queue()
        self.local_seq = 0
        self.overflowed = False

    def push_threadsafe(self, loop: asyncio.AbstractEventLoop, frame: Frame) -> None:
        loop.call_soon_threadsafe(self._push, frame)

    def _push(self, frame: Frame) -> None:
        if self.overflowed:
            return
        events = frame.events
        if self.types is not None:
            events = tuple(e for e in events if e.type_id in self.types)
        if not events:
            return
        if self.queue.qsize() >= self.buffer:
            self.overflowed = True
            self.queue.put_nowait(None)  # overflow sentinel
            return
        self.local_seq += 1
        self.queue.put_nowait(Frame(self.local_seq, events))


class StreamHub:
    def __init__(self, buffer_size: int = 10_000, heartbeat_seconds: float = 15.0):
        self.buffer_size = buffer_size
        self.heartbeat_seconds = heartbeat_seconds
        self._ring: deque[Frame] = deque(maxlen=buffer_size)
        self._seq = 0
        self._lock = threading.Lock()
        self._loop: Optional[asyncio.AbstractEventLoop] = None
        self._subs: list[_Subscription] = []

    def attach_loop(self, loop: asyncio.AbstractEventLoop) -> None:
        self._loop = loop

    # store listener entry point; runs on whatever thread wrote the event
    def publish(self, record: EventRecord) -> None:
        with self._lock:
            self._seq += 1
            frame = Frame(self._seq, (record,))
            self._ring.append(frame)
            subs = list(self._subs)
            loop = self._loop
        if loop is not None:
            for sub in subs:
                sub.push_threadsafe(loop, frame)

    def subscribe(self, types: Optional[frozenset[str]]) -> _Subscription:
        sub = _Subscription(self, types, self.buffer_size)
        with self._lock:
            self._subs.append(sub)
        return sub

    def unsubscribe(self, sub: _Subscription) -> None:
        with self._lock:
            if sub in self._subs:
                self._subs.remove(sub)

    def frames_since(
        self,
        since: int,
        types: Optional[frozenset[str]] = None,
        limit: int = 500,
    ) -> tuple[list[dict], int, bool]:
        """Long-polling fallback: frames with global seq > since.

        Returns (frames, next_cursor, lagged). lagged means the cursor fell
        behind the ring buffer and frames were lost to this poller.
        """
        with self._lock:
            frames = list(self._ring)
        lagged = bool(frames) and since and frames[0].seq > since + 1
        out = []
        next_cursor = since
        for frame in frames:
            if frame.seq <= since:
                continue
            next_cursor = frame.seq
            events = frame.events
            if types is not None:
                events = tuple(e for e in events if e.type_id in types)
            if events:
                out.append({"seq": frame.seq, "events": [event_json(e) for e in events]})
            if len(out) >= limit:
                break
        return out, next_cursor, lagged

    async def sse_stream(self, sub: _Subscription):
        """Yield server-sent-event chunks until overflow or disconnect."""
        try:
            while True:
                try:
                    frame = await asyncio.wait_for(
                        sub.queue.get(), timeout=self.heartbeat_seconds
                    )
                except asyncio.TimeoutError:
                    yield _sse({"kind": "heartbeat"})
                    continue
                if frame is None:
                    yield _sse({"kind": "overflow", "buffer": self.buffer_size})
                    return
                yield _sse(
                    {
                        "kind": "events",
                        "seq": frame.seq,
                        "events": [event_json(e) for e in frame.events],
                    }
                )
        finally:
            self.unsubscribe(sub)


def _sse(payload: dict) -> str:
    return f"data: {json.dumps(payload)}\n\n"
