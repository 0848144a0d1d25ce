"""Deterministic test-signal generation.

All stimuli are reproducible from their seed: the generator is numpy's
PCG64, a named, documented algorithm whose stream is stable across
platforms and library versions.  Averaged measurements (e.g. the free-field
dictionary) draw realizations from seeds seed+0 .. seed+r-1 so every run is
auditable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.io import wavfile
from scipy.signal import windows

WHITE_NOISE = "white-noise"
PINK_NOISE = "pink-noise"
IMPULSE = "impulse"
_KINDS = (WHITE_NOISE, PINK_NOISE, IMPULSE)


@dataclass(frozen=True)
class Stimulus:
    kind: str = WHITE_NOISE
    duration: float = 0.05  # seconds
    taper_fraction: float = 0.05  # Tukey window taper
    seed: int = 0
    sample_rate: int = 44100

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown stimulus kind {self.kind!r}")
        if self.duration <= 0.0:
            raise ValueError("duration must be positive")
        if not 0.0 <= self.taper_fraction <= 1.0:
            raise ValueError("taper_fraction must be within [0, 1]")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sample_rate))

    def with_seed(self, seed: int) -> "Stimulus":
        return replace(self, seed=seed)


def tukey_window(n: int, taper: float) -> np.ndarray:
    """Cosine-tapered rectangular window; taper=0 is flat, taper=1 is Hann."""
    if n < 2:
        raise ValueError("window length must be at least 2")
    if not 0.0 <= taper <= 1.0:
        raise ValueError("taper must be within [0, 1]")
    return windows.tukey(n, alpha=taper, sym=True)


def generate(stimulus: Stimulus) -> np.ndarray:
    """Render the stimulus to a float64 sample buffer.

    White noise is i.i.d. standard normal; pink noise is white noise shaped
    to a 1/sqrt(f) magnitude in the frequency domain (DC zeroed, then
    rescaled to unit sample variance); the impulse is a single unit sample
    at the buffer start.  Noise bursts are multiplied by the Tukey window,
    the impulse is not.
    """
    n = stimulus.n_samples
    if stimulus.kind == IMPULSE:
        buf = np.zeros(n)
        buf[0] = 1.0
        return buf

    rng = np.random.Generator(np.random.PCG64(stimulus.seed))
    buf = rng.standard_normal(n)
    if stimulus.kind == PINK_NOISE:
        spectrum = np.fft.rfft(buf)
        freqs = np.fft.rfftfreq(n, d=1.0 / stimulus.sample_rate)
        shaping = np.zeros_like(freqs)
        shaping[1:] = 1.0 / np.sqrt(freqs[1:])
        buf = np.fft.irfft(spectrum * shaping, n=n)
        buf /= buf.std()
    return buf * tukey_window(n, stimulus.taper_fraction)


def write_wav(path, data: np.ndarray, sample_rate: int) -> None:
    """Dump a mono or multi-channel buffer as 32-bit float WAV."""
    wavfile.write(path, sample_rate, np.asarray(data, dtype=np.float32))
