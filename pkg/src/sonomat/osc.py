"""Open Sound Control 1.0 message encoding and decoding.

Messages only (no bundles or time tags): padded NUL-terminated ASCII
strings, big-endian numbers, everything aligned to 4 bytes. Supported
argument types are int32 ('i'), float32 ('f'), string ('s') and blob
('b'). Decoding never raises anything but OscDecodeError, whatever the
input bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import OscDecodeError, OscEncodeError

__all__ = ["OscMessage", "encode_osc", "decode_osc"]


@dataclass(frozen=True)
class OscMessage:
    address: str
    arguments: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "arguments", tuple(self.arguments))


def _padded_string(text: str) -> bytes:
    try:
        raw = text.encode("ascii")
    except UnicodeEncodeError:
        raise OscEncodeError(f"OSC strings must be ASCII: {text!r}") from None
    if b"\x00" in raw:
        raise OscEncodeError("OSC strings cannot contain NUL")
    return raw + b"\x00" * (4 - len(raw) % 4)


def _padded_blob(raw: bytes) -> bytes:
    pad = (4 - len(raw) % 4) % 4
    return struct.pack(">i", len(raw)) + raw + b"\x00" * pad


def encode_osc(message: OscMessage) -> bytes:
    """Serialize a message; output length is always a multiple of 4."""
    if not message.address.startswith("/"):
        raise OscEncodeError(f"address must start with '/': {message.address!r}")
    tags = ","
    body = b""
    for arg in message.arguments:
        if isinstance(arg, bool):
            raise OscEncodeError("booleans are not supported")
        if isinstance(arg, int):
            if not -(2**31) <= arg < 2**31:
                raise OscEncodeError(f"int32 out of range: {arg}")
            tags += "i"
            body += struct.pack(">i", arg)
        elif isinstance(arg, float):
            tags += "f"
            body += struct.pack(">f", arg)
        elif isinstance(arg, str):
            tags += "s"
            body += _padded_string(arg)
        elif isinstance(arg, (bytes, bytearray)):
            tags += "b"
            body += _padded_blob(bytes(arg))
        else:
            raise OscEncodeError(f"unsupported argument type {type(arg).__name__}")
    return _padded_string(message.address) + _padded_string(tags) + body


class _Reader:
    """Bounds-checked cursor over a packet."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise OscDecodeError("truncated packet")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def string(self) -> str:
        end = self.data.find(b"\x00", self.pos)
        if end < 0:
            raise OscDecodeError("unterminated string")
        raw = self.data[self.pos:end]
        # consume through the NUL, then the zero padding to a 4-byte edge
        padded = end + 1 - self.pos
        padded += (4 - padded % 4) % 4
        field = self.take(padded)
        if any(field[len(raw) + 1:]):
            raise OscDecodeError("nonzero string padding")
        try:
            return raw.decode("ascii")
        except UnicodeDecodeError:
            raise OscDecodeError("non-ASCII string") from None

    def done(self) -> bool:
        return self.pos == len(self.data)


def decode_osc(data: bytes) -> OscMessage:
    """Parse a message packet; raises OscDecodeError on any malformation."""
    if not isinstance(data, (bytes, bytearray, memoryview)):
        raise OscDecodeError("packet must be bytes")
    data = bytes(data)
    if len(data) == 0 or len(data) % 4:
        raise OscDecodeError(f"packet length {len(data)} is not a multiple of 4")
    reader = _Reader(data)
    address = reader.string()
    if not address.startswith("/"):
        raise OscDecodeError(f"address does not start with '/': {address!r}")
    tags = reader.string()
    if not tags.startswith(","):
        raise OscDecodeError("type-tag string does not start with ','")
    args = []
    for tag in tags[1:]:
        if tag == "i":
            args.append(struct.unpack(">i", reader.take(4))[0])
        elif tag == "f":
            value = struct.unpack(">f", reader.take(4))[0]
            args.append(float(value))
        elif tag == "s":
            args.append(reader.string())
        elif tag == "b":
            (size,) = struct.unpack(">i", reader.take(4))
            if size < 0:
                raise OscDecodeError("negative blob size")
            raw = reader.take(size)
            pad = reader.take((4 - size % 4) % 4)
            if any(pad):
                raise OscDecodeError("nonzero blob padding")
            args.append(raw)
        else:
            raise OscDecodeError(f"unsupported type tag {tag!r}")
    if not reader.done():
        raise OscDecodeError("trailing bytes after arguments")
    return OscMessage(address, tuple(args))
