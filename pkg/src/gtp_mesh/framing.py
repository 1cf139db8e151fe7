"""Length-prefixed frame codec for the service pipes.

Wire layout, both directions: a 32-bit big-endian unsigned byte count, then
exactly that many bytes of UTF-8 JSON holding one object with fields ``id``
(unsigned 64-bit), ``op`` (string), and ``body`` (op-specific object).
Payloads are capped at 16 MiB so a corrupt header cannot wedge a reader.
"""

from __future__ import annotations

import json
import struct
from typing import BinaryIO, NamedTuple, Optional

from .errors import MalformedPayloadError, OversizeError, TruncatedError

MAX_PAYLOAD = 16 * 1024 * 1024
MAX_ID = 2**64 - 1
_HEADER = struct.Struct(">I")


class Frame(NamedTuple):
    id: int
    op: str
    body: dict


def frame_payload(payload: bytes) -> bytes:
    """Prefix raw payload bytes with their length."""
    if len(payload) > MAX_PAYLOAD:
        raise OversizeError(f"payload of {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    return _HEADER.pack(len(payload)) + payload


def encode_frame(frame_id: int, op: str, body: dict) -> bytes:
    if not isinstance(frame_id, int) or not 0 <= frame_id <= MAX_ID:
        raise ValueError(f"frame id must be an unsigned 64-bit integer, got {frame_id!r}")
    if not isinstance(op, str):
        raise ValueError(f"op must be a string, got {op!r}")
    if not isinstance(body, dict):
        raise ValueError(f"body must be an object, got {type(body).__name__}")
    payload = json.dumps(
        {"id": frame_id, "op": op, "body": body}, ensure_ascii=False, separators=(",", ":")
    ).encode("utf-8")
    return frame_payload(payload)


def decode_payload(payload: bytes) -> Frame:
    try:
        obj = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedPayloadError(f"payload is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedPayloadError("payload is not an object")
    frame_id = obj.get("id")
    op = obj.get("op")
    body = obj.get("body")
    if not isinstance(frame_id, int) or isinstance(frame_id, bool) or not 0 <= frame_id <= MAX_ID:
        raise MalformedPayloadError(f"bad frame id: {frame_id!r}")
    if not isinstance(op, str):
        raise MalformedPayloadError(f"bad op: {op!r}")
    if not isinstance(body, dict):
        raise MalformedPayloadError(f"bad body: {body!r}")
    return Frame(frame_id, op, body)


def decode_frame(data: bytes) -> tuple[Frame, int]:
    """Decode one frame from the head of ``data``.

    Returns the frame and the number of bytes consumed (header + payload);
    trailing bytes belong to the next frame.
    """
    if len(data) < _HEADER.size:
        raise TruncatedError(f"{len(data)} bytes is too short for a frame header")
    (length,) = _HEADER.unpack_from(data)
    if length > MAX_PAYLOAD:
        raise OversizeError(f"header promises {length} bytes, limit is {MAX_PAYLOAD}")
    end = _HEADER.size + length
    if len(data) < end:
        raise TruncatedError(f"header promises {length} payload bytes, got {len(data) - _HEADER.size}")
    return decode_payload(data[_HEADER.size:end]), end


def read_frame(stream: BinaryIO) -> Optional[Frame]:
    """Read one frame from a blocking stream; None on clean EOF at a boundary."""
    header = _read_exact(stream, _HEADER.size)
    if header is None:
        return None
    if len(header) < _HEADER.size:
        raise TruncatedError("stream ended inside a frame header")
    (length,) = _HEADER.unpack(header)
    if length > MAX_PAYLOAD:
        raise OversizeError(f"header promises {length} bytes, limit is {MAX_PAYLOAD}")
    payload = _read_exact(stream, length) if length else b""
    if payload is None or len(payload) < length:
        raise TruncatedError("stream ended inside a frame payload")
    return decode_payload(payload)


def write_frame(stream: BinaryIO, frame_id: int, op: str, body: dict) -> None:
    stream.write(encode_frame(frame_id, op, body))
    stream.flush()


def _read_exact(stream: BinaryIO, n: int) -> Optional[bytes]:
    """Read exactly n bytes; None if the stream is already at EOF."""
    if n == 0:
        return b""
    chunks = []
    got = 0
    while got < n:
        chunk = stream.read(n - got)
        if not chunk:
            return b"".join(chunks) if chunks else None
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)
