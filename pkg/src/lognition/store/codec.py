"""Canonical binary encoding for records and the segment-file framing.

Layout is little-endian throughout. Strings are u16 length + UTF-8 bytes,
messages u32 length + UTF-8. A segment entry on disk is:

    u32 frame_length | u8 op | u64 lsn | body

where op 1 carries an event record and op 2 an application run. A truncated
trailing frame (crash mid-append) is detected by length and ignored on
replay.
"""
from __future__ import annotations

import struct
from typing import BinaryIO, Iterator, Optional

from ..errors import ParseError
from ..model import ApplicationRun, EventRecord, ExitStatus, NodeLocation

OP_EVENT = 1
OP_APP = 2

_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")

_EXIT_CODES = {s: i for i, s in enumerate(ExitStatus)}
_EXIT_FROM_CODE = {i: s for s, i in _EXIT_CODES.items()}


def _put_str(out: bytearray, text: str, wide: bool = False) -> None:
    raw = text.encode("utf-8")
    out += (_U32 if wide else _U16).pack(len(raw))
    out += raw


class _Reader:
    def __init__(self, raw: bytes):
        self.raw = raw
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.raw):
            raise ParseError("record encoding truncated")
        chunk = self.raw[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u16(self) -> int:
        return _U16.unpack(self.take(2))[0]

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def u64(self) -> int:
        return _U64.unpack(self.take(8))[0]

    def string(self, wide: bool = False) -> str:
        n = self.u32() if wide else self.u16()
        return self.take(n).decode("utf-8")


def encode_event(record: EventRecord) -> bytes:
    out = bytearray()
    out += _U64.pack(record.timestamp)
    out += _U32.pack(record.count)
    _put_str(out, record.type_id)
    out += record.location.encode()
    _put_str(out, record.raw_message, wide=True)
    out += _U16.pack(len(record.attributes))
    for key in sorted(record.attributes):
        _put_str(out, key)
        _put_str(out, record.attributes[key], wide=True)
    return bytes(out)


def decode_event(raw: bytes) -> EventRecord:
    r = _Reader(raw)
    ts = r.u64()
    count = r.u32()
    type_id = r.string()
    loc = NodeLocation.decode(r.take(5))
    message = r.string(wide=True)
    n_attrs = r.u16()
    attrs = {}
    for _ in range(n_attrs):
        key = r.string()
        attrs[key] = r.string(wide=True)
    return EventRecord(ts, type_id, loc, count, message, attrs)


def encode_app(run: ApplicationRun) -> bytes:
    out = bytearray()
    _put_str(out, run.job_id)
    _put_str(out, run.user)
    _put_str(out, run.app_name)
    out += _U64.pack(run.start_ts)
    out += _U64.pack(run.end_ts)
    out.append(_EXIT_CODES[run.exit_status])
    nodes = sorted(run.nodes)
    out += _U32.pack(len(nodes))
    for loc in nodes:
        out += loc.encode()
    return bytes(out)


def decode_app(raw: bytes) -> ApplicationRun:
    r = _Reader(raw)
    job_id = r.string()
    user = r.string()
    app_name = r.string()
    start = r.u64()
    end = r.u64()
    status = _EXIT_FROM_CODE[r.take(1)[0]]
    n = r.u32()
    nodes = frozenset(NodeLocation.decode(r.take(5)) for _ in range(n))
    return ApplicationRun(job_id, user, app_name, start, end, nodes, status)


def write_frame(fh: BinaryIO, op: int, lsn: int, body: bytes) -> int:
    """Append one framed entry; returns the byte offset it was written at."""
    offset = fh.tell()
    payload = bytes([op]) + _U64.pack(lsn) + body
    fh.write(_U32.pack(len(payload)))
    fh.write(payload)
    return offset


def read_frames(fh: BinaryIO) -> Iterator[tuple[int, int, int, bytes]]:
    """Yield (offset, op, lsn, body) for each complete frame; stop at a torn tail."""
    while True:
        offset = fh.tell()
        header = fh.read(4)
        if len(header) < 4:
            return
        (length,) = _U32.unpack(header)
        payload = fh.read(length)
        if len(payload) < length or length < 9:
            return  # torn or nonsense tail: ignore everything from here on
        yield offset, payload[0], _U64.unpack(payload[1:9])[0], payload[9:]
