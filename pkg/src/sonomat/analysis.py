"""Envelope and spectrum measurements on rendered audio.

Used by the CLI reports and the acceptance checks that compare soft and
hard materials on decay time and brightness.
"""

from __future__ import annotations

import numpy as np

from .synth import AudioBuffer, spectrogram

__all__ = ["estimate_t60", "spectral_centroid", "dominant_ridge_hz"]


def _rms_envelope_db(x: np.ndarray, sr: float, window_s: float):
    win = max(8, int(round(window_s * sr)))
    frames = len(x) // win
    if frames < 3:
        raise ValueError("buffer too short for envelope estimation")
    seg = x[: frames * win].reshape(frames, win)
    rms = np.sqrt(np.mean(seg * seg, axis=1))
    db = 20.0 * np.log10(np.maximum(rms, 1e-12))
    t = (np.arange(frames) + 0.5) * win / sr
    return t, db


def estimate_t60(
    buffer: AudioBuffer,
    window_s: float = 0.005,
    skip_db: float = 25.0,
    span_db: float = 30.0,
) -> float:
    """Decay time to -60 dB, from a line fit to the RMS envelope.

    Skips the first ``skip_db`` below the peak (the multi-mode transient
    decays faster than the tail) and fits the next ``span_db`` of decay,
    extrapolating the slope to 60 dB. Returns inf when the envelope never
    decays.
    """
    t, db = _rms_envelope_db(buffer.samples, buffer.sample_rate, window_s)
    peak_idx = int(np.argmax(db))
    peak = db[peak_idx]
    hi, lo = peak - skip_db, peak - skip_db - span_db
    idx = []
    for i in range(peak_idx, len(db)):
        if db[i] > hi:
            continue
        if db[i] < lo:
            break
        idx.append(i)
    if len(idx) < 4:
        # decay faster than the window resolution; refit on a finer grid
        if window_s > 0.0003:
            return estimate_t60(buffer, window_s / 4.0, skip_db, span_db)
        raise ValueError("not enough envelope points to fit a decay")
    sel = np.array(idx)
    slope, _ = np.polyfit(t[sel], db[sel], 1)
    if slope >= 0:
        return float("inf")
    return -60.0 / slope


def spectral_centroid(buffer: AudioBuffer) -> float:
    """Amplitude-weighted mean frequency (Hz) of the whole buffer."""
    mag = np.abs(np.fft.rfft(buffer.samples))
    total = mag.sum()
    if total == 0:
        return 0.0
    freqs = np.fft.rfftfreq(len(buffer.samples), d=1.0 / buffer.sample_rate)
    return float((freqs * mag).sum() / total)


def dominant_ridge_hz(buffer: AudioBuffer, window: int = 4096, hop: int = 1024,
                      fmin: float = 20.0) -> float:
    """Frequency of the brightest horizontal ridge of the spectrogram.

    Peak bin of the frame-averaged dB spectrum, searched above ``fmin``
    (low-frequency window leakage otherwise drags very dull sounds to DC).
    Averaging in dB weights persistence the way the rendered image does,
    so this tracks the longest-ringing strong mode rather than the loudest
    transient.
    """
    db = spectrogram(buffer, window, hop)
    bin_hz = buffer.sample_rate / window
    first = int(np.ceil(fmin / bin_hz))
    return float((first + np.argmax(db.mean(axis=0)[first:])) * bin_hz)
