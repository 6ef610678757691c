"""Minimal RIFF/WAVE reader and writer.

Writes mono little-endian files with exactly two chunks, fmt and data,
as 32-bit IEEE float (default) or 16-bit PCM. The stdlib wave module
cannot write float data and scipy inserts a fact chunk, hence this one.
``WavCaptureWriter`` streams blocks to disk and patches the sizes on
close, for the live engine's capture file.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import WavFormatError
from .synth import AudioBuffer

__all__ = ["write_wav", "read_wav", "WavCaptureWriter"]

_FORMAT_PCM = 1
_FORMAT_FLOAT = 3


def _fmt_chunk(fmt_code: int, sample_rate: int, bits: int) -> bytes:
    block_align = bits // 8  # mono
    return struct.pack(
        "<4sIHHIIHH",
        b"fmt ",
        16,
        fmt_code,
        1,
        sample_rate,
        sample_rate * block_align,
        block_align,
        bits,
    )


def _encode(samples: np.ndarray, pcm16: bool) -> tuple[bytes, int, int]:
    if pcm16:
        clipped = np.clip(samples, -1.0, 1.0)
        data = (clipped * 32767.0).round().astype("<i2").tobytes()
        return data, _FORMAT_PCM, 16
    return samples.astype("<f4").tobytes(), _FORMAT_FLOAT, 32


def write_wav(path_or_file, buffer: AudioBuffer, pcm16: bool = False) -> None:
    """Write an AudioBuffer as a mono WAV (fmt + data chunks only).

    Accepts a filesystem path or a binary file object.
    """
    data, fmt_code, bits = _encode(buffer.samples, pcm16)
    sr = int(round(buffer.sample_rate))

    def emit(fh):
        fh.write(struct.pack("<4sI4s", b"RIFF", 4 + 24 + 8 + len(data), b"WAVE"))
        fh.write(_fmt_chunk(fmt_code, sr, bits))
        fh.write(struct.pack("<4sI", b"data", len(data)))
        fh.write(data)

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "wb") as fh:
            emit(fh)


def read_wav(path) -> AudioBuffer:
    """Read a mono or multichannel WAV (PCM16/PCM32/float32/float64).

    Multichannel input is mixed down to mono by averaging.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12 or blob[:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")
    pos = 12
    fmt = None
    data = None
    while pos + 8 <= len(blob):
        cid, size = struct.unpack("<4sI", blob[pos:pos + 8])
        body = blob[pos + 8:pos + 8 + size]
        if len(body) < size:
            raise WavFormatError(f"{path}: truncated {cid!r} chunk")
        if cid == b"fmt ":
            fmt = body
        elif cid == b"data":
            data = body
        pos += 8 + size + (size & 1)
    if fmt is None or data is None:
        raise WavFormatError(f"{path}: missing fmt or data chunk")
    if len(fmt) < 16:
        raise WavFormatError(f"{path}: fmt chunk too short")
    fmt_code, channels, sample_rate, _, _, bits = struct.unpack("<HHIIHH", fmt[:16])
    if channels < 1:
        raise WavFormatError(f"{path}: zero channels")
    if fmt_code == _FORMAT_PCM and bits == 16:
        # mirror the writer's scale; full-scale negative clips at -1.00003
        raw = np.frombuffer(data, dtype="<i2").astype(np.float64) / 32767.0
    elif fmt_code == _FORMAT_PCM and bits == 32:
        raw = np.frombuffer(data, dtype="<i4").astype(np.float64) / 2147483648.0
    elif fmt_code == _FORMAT_FLOAT and bits == 32:
        raw = np.frombuffer(data, dtype="<f4").astype(np.float64)
    elif fmt_code == _FORMAT_FLOAT and bits == 64:
        raw = np.frombuffer(data, dtype="<f8").astype(np.float64)
    else:
        raise WavFormatError(f"{path}: unsupported format code {fmt_code}/{bits} bits")
    if channels > 1:
        raw = raw[: len(raw) // channels * channels].reshape(-1, channels).mean(axis=1)
    return AudioBuffer(sample_rate, np.clip(raw, -1.0, 1.0))


class WavCaptureWriter:
    """Streaming mono WAV writer; sizes are patched in on close."""

    def __init__(self, path, sample_rate: float, pcm16: bool = False):
        self.path = path
        self.sample_rate = int(round(sample_rate))
        self.pcm16 = pcm16
        self._bytes_written = 0
        self._fh = open(path, "wb")
        bits = 16 if pcm16 else 32
        self._fh.write(struct.pack("<4sI4s", b"RIFF", 0, b"WAVE"))
        self._fh.write(_fmt_chunk(_FORMAT_PCM if pcm16 else _FORMAT_FLOAT,
                                  self.sample_rate, bits))
        self._fh.write(struct.pack("<4sI", b"data", 0))

    def write(self, samples: np.ndarray) -> None:
        data, _, _ = _encode(np.asarray(samples, dtype=np.float64), self.pcm16)
        self._fh.write(data)
        self._bytes_written += len(data)

    def close(self) -> None:
        if self._fh.closed:
            return
        self._fh.seek(4)
        self._fh.write(struct.pack("<I", 4 + 24 + 8 + self._bytes_written))
        self._fh.seek(40)
        self._fh.write(struct.pack("<I", self._bytes_written))
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
