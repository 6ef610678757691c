"""Audio rendering from a modal model.

Two renderers share the same physics:

* ``render_closed_form`` evaluates the textbook sum of exponentially damped
  sinusoids. It is the slow, obviously-correct reference and the offline
  path.
* ``render_streamed`` advances a bank of impulse-invariant two-pole
  resonators block by block for real-time use. Pole placement is exact, so
  away from the +-1 clip guard it reproduces the closed form to float
  rounding for events that land on sample boundaries.

The streamed inner loop runs on a compiled Cython kernel when the extension
built, with a pure-numpy fallback otherwise; see ``kernel_backend()``.
``render_block_into`` is the allocation-free variant the live engine uses.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .plate import ModalModel, mode_shape

__all__ = [
    "ExcitationEvent",
    "AudioBuffer",
    "ResonatorState",
    "render_closed_form",
    "render_streamed",
    "render_block_into",
    "spectrogram",
    "kernel_backend",
    "set_kernel_backend",
    "available_kernel_backends",
    "MIN_BLOCK",
    "MAX_BLOCK",
    "NORMALIZATION_PEAK",
]

MIN_BLOCK = 64
MAX_BLOCK = 4096
NORMALIZATION_PEAK = 0.9
SPECTROGRAM_FLOOR_DB = -120.0

# ---------------------------------------------------------------------------
# kernel backend selection

from . import _kernel_py as _pure_kernel

try:
    from . import _kernel as _compiled_kernel
except ImportError:
    _compiled_kernel = None

_KERNELS = {"pure": _pure_kernel.run_resonators}
if _compiled_kernel is not None:
    _KERNELS["compiled"] = _compiled_kernel.run_resonators

_active_kernel_name = os.environ.get(
    "SONOMAT_KERNEL", "compiled" if "compiled" in _KERNELS else "pure"
)
if _active_kernel_name not in _KERNELS:
    _active_kernel_name = "compiled" if "compiled" in _KERNELS else "pure"
_run_resonators = _KERNELS[_active_kernel_name]


def kernel_backend() -> str:
    """Name of the active resonator kernel: 'compiled' or 'pure'."""
    return _active_kernel_name


def available_kernel_backends() -> tuple[str, ...]:
    return tuple(sorted(_KERNELS))


def set_kernel_backend(name: str) -> None:
    """Switch the streamed-render kernel (used by benchmarks and tests)."""
    global _active_kernel_name, _run_resonators
    if name not in _KERNELS:
        raise ValueError(f"unknown kernel backend {name!r}; have {sorted(_KERNELS)}")
    _active_kernel_name = name
    _run_resonators = _KERNELS[name]


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class ExcitationEvent:
    """A tap: onset relative to render start, force in (0, 1], plate point.

    plate_point None means "use the model's excitation point".
    """

    onset_time: float
    force: float
    plate_point: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if self.onset_time < 0:
            raise ValueError("onset_time must be >= 0")
        if not (0.0 < self.force <= 1.0):
            raise ValueError("force must be in (0, 1]")


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """Mono audio samples in [-1, 1] plus their sample rate."""

    sample_rate: float
    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain NaN or Inf")
        if samples.size and np.max(np.abs(samples)) > 1.0:
            raise ValueError("samples exceed [-1, 1]")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


class ResonatorState:
    """Per-mode two-pole filter state for streamed rendering.

    Everything the block loop touches is preallocated here; with the
    compiled kernel the render path performs no allocation after
    construction. With zero input each mode's envelope decays by
    exp(-alpha/sr) per sample (exact pole radius).
    """

    def __init__(self, model: ModalModel):
        self.model = model
        self.sample_rate = model.sample_rate
        freq = np.array([m.frequency for m in model.modes])
        alpha = np.array([m.decay_rate for m in model.modes])
        self.base_gain = np.array([m.gain for m in model.modes])
        omega = 2.0 * math.pi * freq / model.sample_rate
        radius = np.exp(-alpha / model.sample_rate)
        self.a1 = 2.0 * radius * np.cos(omega)
        self.a2 = -(radius**2)
        # drive scale: an impulse of amplitude A at sample i makes
        # y[i+d] = A * r^d sin(omega d), the sampled damped sinusoid
        self.b1 = radius * np.sin(omega)
        n = len(freq)
        self.y1 = np.zeros(n)
        self.y2 = np.zeros(n)
        self.pend = np.zeros(n)
        self.position = 0
        # scratch for per-event gain recomputation
        self._m_x = np.array([m.m for m in model.modes], dtype=np.float64)
        self._n_y = np.array([m.n for m in model.modes], dtype=np.float64)
        self._listen = self._shape_at(model.listening_point)
        self._scratch = np.empty(n)
        self._gscratch = np.empty(n)

    def _shape_at(self, point) -> np.ndarray:
        geo = self.model.geometry
        sx = np.sin(self._m_x * (math.pi * point[0] / geo.length_x))
        sy = np.sin(self._n_y * (math.pi * point[1] / geo.length_y))
        return sx * sy

    def reset(self) -> None:
        self.y1[:] = 0.0
        self.y2[:] = 0.0
        self.pend[:] = 0.0
        self.position = 0

    def inject(self, force: float, plate_point=None) -> None:
        """Queue an impulse; it sounds at the next rendered sample."""
        if not (0.0 < force <= 1.0):
            raise ValueError("force must be in (0, 1]")
        if plate_point is None:
            gains = self.base_gain
        else:
            if not self.model.geometry.contains(plate_point):
                raise ValueError(f"plate point {plate_point} outside plate")
            geo = self.model.geometry
            np.multiply(self._m_x, math.pi * plate_point[0] / geo.length_x, out=self._gscratch)
            np.sin(self._gscratch, out=self._gscratch)
            np.multiply(self._n_y, math.pi * plate_point[1] / geo.length_y, out=self._scratch)
            np.sin(self._scratch, out=self._scratch)
            self._gscratch *= self._scratch
            self._gscratch *= self._listen
            gains = self._gscratch
        np.multiply(self.b1, gains, out=self._scratch)
        self._scratch *= force
        self.pend += self._scratch


# ---------------------------------------------------------------------------
# rendering


def _event_gains(model: ModalModel, event: ExcitationEvent) -> np.ndarray:
    if event.plate_point is None:
        return np.array([m.gain for m in model.modes])
    if not model.geometry.contains(event.plate_point):
        raise ValueError(f"plate point {event.plate_point} outside plate")
    listen = model.listening_point
    return np.array(
        [
            mode_shape(model.geometry, m.m, m.n, event.plate_point)
            * mode_shape(model.geometry, m.m, m.n, listen)
            for m in model.modes
        ]
    )


def render_closed_form(
    model: ModalModel,
    event: ExcitationEvent,
    duration: float,
    contact_time: Optional[float] = None,
) -> AudioBuffer:
    """Reference render: force * sum_k g_k e^(-a_k (t-t0)) sin(2 pi f_k (t-t0)).

    The buffer is peak-normalized to 0.9 only if the raw peak exceeds 0.9.
    contact_time, if given, replaces the ideal impulse with a raised-cosine
    contact pulse of that length (seconds) to soften the attack.
    """
    if duration <= 0:
        raise ValueError("duration must be > 0")
    if event.onset_time >= duration:
        raise ValueError("event onset falls outside the render window")
    sr = model.sample_rate
    total = int(round(duration * sr))
    signal = np.zeros(total)
    gains = _event_gains(model, event) * event.force
    freq = np.array([m.frequency for m in model.modes])
    alpha = np.array([m.decay_rate for m in model.modes])

    first = math.ceil(event.onset_time * sr - 1e-9)
    tau = np.arange(first, total) / sr - event.onset_time
    # chunk the (modes x samples) evaluation to bound peak memory
    chunk = max(1, int(4_000_000 / max(1, tau.size)))
    for lo in range(0, len(gains), chunk):
        hi = min(lo + chunk, len(gains))
        phases = np.outer(2.0 * math.pi * freq[lo:hi], tau)
        np.sin(phases, out=phases)
        phases *= np.exp(np.outer(-alpha[lo:hi], tau))
        signal[first:] += gains[lo:hi] @ phases

    if contact_time is not None and contact_time > 0:
        signal = _convolve_contact(signal, contact_time, sr)[:total]

    peak = np.max(np.abs(signal)) if total else 0.0
    if peak > NORMALIZATION_PEAK:
        signal *= NORMALIZATION_PEAK / peak
    return AudioBuffer(sr, signal)


def _convolve_contact(signal: np.ndarray, contact_time: float, sr: float) -> np.ndarray:
    width = max(2, int(round(contact_time * sr)))
    pulse = 0.5 - 0.5 * np.cos(2.0 * math.pi * np.arange(width) / width)
    pulse /= pulse.sum()
    return np.convolve(signal, pulse)


def _event_offsets(state: ResonatorState, events: Sequence[ExcitationEvent], block: int):
    routed = []
    for ev in events:
        offset = int(math.floor(ev.onset_time * state.sample_rate + 0.5)) - state.position
        if not (0 <= offset < block):
            raise ValueError(
                f"event at {ev.onset_time}s quantizes outside block "
                f"[{state.position}, {state.position + block})"
            )
        routed.append((offset, ev))
    routed.sort(key=lambda pair: pair[0])
    return routed


def render_block_into(
    state: ResonatorState,
    events: Sequence[ExcitationEvent],
    out: np.ndarray,
) -> None:
    """Real-time path: fill ``out`` with the next len(out) samples.

    Splits the block at event onsets, running the free-decay kernel between
    injections. Does not allocate (compiled kernel); output is hard-clipped
    to [-1, 1] as the streaming counterpart of the offline peak guard.
    """
    block = len(out)
    if not (MIN_BLOCK <= block <= MAX_BLOCK):
        raise ValueError(f"block size must be in [{MIN_BLOCK}, {MAX_BLOCK}]")
    out.fill(0.0)
    cursor = 0
    for offset, ev in _event_offsets(state, events, block):
        span = offset - cursor + 1  # render through the onset sample
        if span > 0:
            _run_resonators(state.a1, state.a2, state.y1, state.y2,
                            state.pend, out, cursor, span)
            cursor = offset + 1
        state.inject(ev.force, ev.plate_point)
    if cursor < block:
        _run_resonators(state.a1, state.a2, state.y1, state.y2,
                        state.pend, out, cursor, block - cursor)
    state.position += block
    np.clip(out, -1.0, 1.0, out=out)


def render_streamed(
    model: ModalModel,
    state: ResonatorState,
    events: Sequence[ExcitationEvent],
    block_size: int,
) -> tuple[AudioBuffer, ResonatorState]:
    """Render one block; concatenated blocks match the closed form.

    Events must quantize to samples inside this block. The state is
    advanced in place and returned.
    """
    if state.sample_rate != model.sample_rate:
        raise ValueError(
            f"state sample rate {state.sample_rate} != model {model.sample_rate}"
        )
    out = np.empty(int(block_size))
    render_block_into(state, events, out)
    return AudioBuffer(model.sample_rate, out), state


def render_offline_streamed(
    model: ModalModel,
    event: ExcitationEvent,
    duration: float,
    block_size: int = 1024,
) -> AudioBuffer:
    """Run the streamed renderer over a whole duration in one call.

    Fast path for long, many-mode renders (the closed form touches every
    mode-sample pair with transcendental math; the resonator bank does not).
    """
    sr = model.sample_rate
    total = int(round(duration * sr))
    state = ResonatorState(model)
    signal = np.empty(total)
    onset = int(math.floor(event.onset_time * sr + 0.5))
    pos = 0
    while pos < total:
        n = min(block_size, total - pos)
        n = max(n, MIN_BLOCK)
        block = np.empty(n)
        evs = [event] if pos <= onset < pos + n else []
        render_block_into(state, evs, block)
        take = min(n, total - pos)
        signal[pos:pos + take] = block[:take]
        pos += n
    return AudioBuffer(sr, signal)


# ---------------------------------------------------------------------------
# spectrogram


def spectrogram(buffer: AudioBuffer, window: int, hop: int) -> np.ndarray:
    """Magnitude short-time spectrum in dB, shape (frames, window//2 + 1).

    Hann window, frames every ``hop`` samples, floor clamped at -120 dB.
    """
    if window <= 0 or window & (window - 1):
        raise ValueError("window must be a power of two")
    if not (1 <= hop <= window):
        raise ValueError("hop must be in [1, window]")
    x = buffer.samples
    if len(x) < window:
        raise ValueError(f"buffer shorter than one window ({len(x)} < {window})")
    hann = 0.5 - 0.5 * np.cos(2.0 * math.pi * np.arange(window) / window)
    frames = 1 + (len(x) - window) // hop
    out = np.empty((frames, window // 2 + 1))
    for i in range(frames):
        seg = x[i * hop:i * hop + window] * hann
        mag = np.abs(np.fft.rfft(seg))
        out[i] = 20.0 * np.log10(np.maximum(mag, 1e-6))
    return out
