"""Free-field binaural rendering of point sources through HRIRs.

Each source is scaled by gain * (1 m / distance), delayed by
(delay + distance / c) with a 31-tap windowed-sinc fractional delay, and
convolved with the HRIR pair nearest to its azimuth.  Ear signals of all
sources are zero-padded to a common length and summed.

Sub-sample delays matter here: at 44.1 kHz one sample is 22.7 us, on the
order of the overlap delays the model is trying to resolve, so
nearest-sample rounding is only offered as a debug mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .geometry import (
    SPEED_OF_SOUND,
    ListenerPose,
    PanningPoint,
    SourcePlacement,
    StereoSetup,
    loudspeaker_positions,
    source_relative_to_listener,
)
from .hrir import HrirSet

SINC_TAPS = 31
_HALF = (SINC_TAPS - 1) // 2

SINC_INTERPOLATION = "sinc"
NEAREST_INTERPOLATION = "nearest"  # debug mode


@dataclass(frozen=True)
class RenderSource:
    signal: np.ndarray
    gain: float
    delay: float  # seconds, >= 0
    placement: SourcePlacement

    def __post_init__(self):
        if self.delay < 0.0:
            raise ValueError("delay must be non-negative")


@dataclass
class EarSignals:
    left: np.ndarray
    right: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.left = np.asarray(self.left, dtype=float)
        self.right = np.asarray(self.right, dtype=float)
        if self.left.shape != self.right.shape:
            raise ValueError("ear signals must have equal lengths")

    def swapped(self) -> "EarSignals":
        return EarSignals(self.right.copy(), self.left.copy(), self.sample_rate)


def fractional_delay_kernel(delay_samples: float) -> tuple[np.ndarray, int]:
    """Windowed-sinc interpolation kernel and its integer placement offset.

    Returns (kernel, offset) such that placing the kernel at ``offset``
    realizes exactly ``delay_samples`` of group delay (the half-width lead
    of the sinc is already folded into the offset for offsets that permit
    it; callers convolving whole buffers should use fractional_delay()).
    """
    if delay_samples < 0.0:
        raise ValueError("delay must be non-negative")
    n0 = int(math.floor(delay_samples))
    mu = delay_samples - n0
    t = np.arange(SINC_TAPS) - _HALF - mu
    # Blackman window evaluated continuously at the shifted taps.
    width = _HALF + 1.0
    w = 0.42 + 0.5 * np.cos(np.pi * t / width) + 0.08 * np.cos(2.0 * np.pi * t / width)
    w[np.abs(t) > width] = 0.0
    kernel = np.sinc(t) * w
    kernel /= kernel.sum()
    return kernel, n0


def fractional_delay(
    signal: np.ndarray,
    delay_samples: float,
    interpolation: str = SINC_INTERPOLATION,
) -> np.ndarray:
    """Delay a buffer by a (possibly fractional) number of samples.

    Output length grows by ceil(delay) plus the interpolator half-width; the
    effective group delay is exactly ``delay_samples``.
    """
    signal = np.asarray(signal, dtype=float)
    if delay_samples < 0.0:
        raise ValueError("delay must be non-negative")
    if interpolation == NEAREST_INTERPOLATION:
        n0 = int(round(delay_samples))
        return np.concatenate([np.zeros(n0), signal])
    if interpolation != SINC_INTERPOLATION:
        raise ValueError(f"unknown interpolation {interpolation!r}")
    kernel, n0 = fractional_delay_kernel(delay_samples)
    full = np.convolve(signal, kernel)
    # Trim the kernel's half-width lead so group delay equals delay_samples.
    if n0 >= _HALF:
        return np.concatenate([np.zeros(n0 - _HALF), full])
    return full[_HALF - n0 :]


def render(
    sources: list[RenderSource],
    hrirs: HrirSet,
    speed_of_sound: float = SPEED_OF_SOUND,
    sample_rate: int | None = None,
    interpolation: str = SINC_INTERPOLATION,
) -> EarSignals:
    """Sum the binaural contributions of every source at the listener's ears."""
    if not sources:
        raise ValueError("at least one source is required")
    if sample_rate is not None and sample_rate != hrirs.sample_rate:
        raise ValueError(
            f"sample rate mismatch: sources at {sample_rate} Hz, "
            f"HRIRs at {hrirs.sample_rate} Hz"
        )
    fs = hrirs.sample_rate

    lefts = []
    rights = []
    for src in sources:
        ir_left, ir_right = hrirs.select(src.placement.azimuth)
        amp = src.gain / src.placement.distance  # unit gain at 1 m
        total_delay = src.delay + src.placement.distance / speed_of_sound
        delayed = fractional_delay(src.signal * amp, total_delay * fs, interpolation)
        lefts.append(fftconvolve(delayed, ir_left))
        rights.append(fftconvolve(delayed, ir_right))

    length = max(buf.size for buf in lefts)
    left = np.zeros(length)
    right = np.zeros(length)
    for lbuf, rbuf in zip(lefts, rights):
        left[: lbuf.size] += lbuf
        right[: rbuf.size] += rbuf
    return EarSignals(left=left, right=right, sample_rate=fs)


def stereo_pair_sources(
    point: PanningPoint,
    setup: StereoSetup,
    pose: ListenerPose,
    signal: np.ndarray,
) -> list[RenderSource]:
    """Loudspeaker feeds realizing a panning point for the given listener.

    Gains satisfy g_L/g_R = 10^(icld/20) with g_L^2 + g_R^2 = 1; delays
    satisfy tau_R - tau_L = ictd with the earlier channel at zero delay.
    """
    if abs(point.ictd) > 2e-3:
        raise ValueError("|ictd| above 2 ms is outside the supported regime")
    ratio = 10.0 ** (point.icld / 20.0)
    g_right = 1.0 / math.sqrt(1.0 + ratio * ratio)
    g_left = ratio * g_right
    if point.ictd >= 0.0:
        tau_left, tau_right = 0.0, point.ictd
    else:
        tau_left, tau_right = -point.ictd, 0.0

    left_pos, right_pos = loudspeaker_positions(setup)
    return [
        RenderSource(
            signal=signal,
            gain=g_left,
            delay=tau_left,
            placement=source_relative_to_listener(left_pos, pose),
        ),
        RenderSource(
            signal=signal,
            gain=g_right,
            delay=tau_right,
            placement=source_relative_to_listener(right_pos, pose),
        ),
    ]
