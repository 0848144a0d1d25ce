"""Panning-law and recording-geometry mathematics.

Covers the Williams time-amplitude curve lookup, the tangent-law panning
design that trades inter-channel time against level under the Williams
constraint, the classic two-microphone arrangements, and the coverage-angle
scan that measures how much of the frontal stage an arrangement can render
without leaving the Williams region.

The Williams curves are published as a figure, not a table.  The control
points embedded here are a piecewise-linear digitization anchored at
(0 ms, 15 dB) and (1 ms, 0 dB); they are approximate and can be overridden
from a JSON file of (ictd_ms, icld_db) pairs for the left curve (the right
curve is always the mirror).  Coverage-angle checks elsewhere carry a
+-10 degree tolerance to absorb the digitization error.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .geometry import SPEED_OF_SOUND, PanningPoint

SUMMING_LOCALIZATION_LIMIT = 1e-3  # seconds

OMNI = "omni"
CARDIOID = "cardioid"
FIGURE8 = "figure8"
PSR_CUSTOM = "psr-custom"

# Left-curve digitization: (ictd_ms, icld_db), non-increasing.
DEFAULT_WILLIAMS_POINTS = (
    (0.00, 15.0),
    (0.05, 13.6),
    (0.10, 12.4),
    (0.15, 11.35),
    (0.20, 10.4),
    (0.25, 9.55),
    (0.30, 8.8),
    (0.36, 8.0),
    (0.40, 7.55),
    (0.45, 6.8),
    (0.50, 6.15),
    (0.56, 5.3),
    (0.60, 4.8),
    (0.70, 3.6),
    (0.80, 2.4),
    (0.90, 1.2),
    (1.00, 0.0),
)


class PatternNullError(ValueError):
    """Directivity pattern evaluates to zero at the requested angle."""


@dataclass(frozen=True)
class WilliamsCurves:
    ictd_ms: tuple  # left-curve knots, ascending, 0 .. 1 ms
    icld_db: tuple
    provenance: str = "embedded digitization (approximate)"

    def __post_init__(self):
        t = np.asarray(self.ictd_ms, dtype=float)
        v = np.asarray(self.icld_db, dtype=float)
        if t[0] != 0.0 or abs(t[-1] - 1.0) > 1e-12:
            raise ValueError("left curve must span 0 .. 1 ms")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("curve knots must be strictly increasing")
        if np.any(np.diff(v) > 0.0):
            raise ValueError("left curve must be non-increasing")

    @classmethod
    def default(cls) -> "WilliamsCurves":
        t, v = zip(*DEFAULT_WILLIAMS_POINTS)
        return cls(ictd_ms=t, icld_db=v)

    @classmethod
    def from_json(cls, path) -> "WilliamsCurves":
        with open(path, "r", encoding="utf-8") as fh:
            points = json.load(fh)
        t, v = zip(*[(float(a), float(b)) for a, b in points])
        return cls(ictd_ms=t, icld_db=v, provenance=f"loaded from {path}")

    def left(self, ictd: float) -> float:
        """Left-curve level bound for ictd in seconds.

        Defined by the digitization on [0, 1] ms; continued into negative
        ictd by point mirroring about (0, W(0)) so the bound keeps rising
        when time leads oppose the level lead (documented approximation,
        only reachable by inconsistent panning points).
        """
        t_ms = ictd * 1e3
        if t_ms > 1.0 + 1e-12 or t_ms < -1.0 - 1e-12:
            raise ValueError("beyond summing-localization regime")
        if t_ms >= 0.0:
            return float(np.interp(t_ms, self.ictd_ms, self.icld_db))
        mirrored = float(np.interp(-t_ms, self.ictd_ms, self.icld_db))
        return 2.0 * self.icld_db[0] - mirrored

    def right(self, ictd: float) -> float:
        return -self.left(-ictd)

    def contains(self, point: PanningPoint, tol: float = 1e-9) -> bool:
        """Point lies between the right and left curves (inclusive)."""
        if abs(point.ictd) > SUMMING_LOCALIZATION_LIMIT + 1e-12:
            return False
        return (
            self.right(point.ictd) - tol
            <= point.icld
            <= self.left(point.ictd) + tol
        )


def williams_icld(ictd: float, curves: WilliamsCurves) -> float:
    """Boundary level for a time lead: left curve for ictd >= 0, mirrored below."""
    if abs(ictd) > SUMMING_LOCALIZATION_LIMIT + 1e-12:
        raise ValueError("beyond summing-localization regime")
    if ictd >= 0.0:
        return curves.left(ictd)
    return -curves.left(-ictd)


@dataclass(frozen=True)
class PsrDesign:
    d: float  # inter-microphone distance, meters
    phi0: float  # base angle, radians
    ictd_max: float  # seconds, at theta_s = phi0/2
    icld_w: float  # dB, Williams level at ictd_max
    beta: float  # radians, tangent-law free parameter


@dataclass(frozen=True)
class MicArrangement:
    name: str
    distance: float  # inter-microphone distance, meters
    base_angle: float  # radians between the two microphone aims
    directivity: str  # OMNI | CARDIOID | FIGURE8 | PSR_CUSTOM
    psr_params: tuple | None = None  # (beta, icld_w) for PSR_CUSTOM

    def __post_init__(self):
        if self.distance < 0.0:
            raise ValueError("distance must be non-negative")
        if not 0.0 < self.base_angle < 2.0 * math.pi:
            raise ValueError("base_angle must be in (0, 2*pi)")
        if self.directivity == PSR_CUSTOM and self.psr_params is None:
            raise ValueError("psr-custom arrangement needs psr_params")


TABLE_ARRANGEMENTS = {
    "blumlein": MicArrangement("Blumlein", 0.0, math.radians(90.0), FIGURE8),
    "xy90": MicArrangement("90-deg XY", 0.0, math.radians(90.0), CARDIOID),
    "ortf": MicArrangement("ORTF", 0.17, math.radians(110.0), CARDIOID),
    "din": MicArrangement("DIN", 0.20, math.radians(90.0), CARDIOID),
    "nos": MicArrangement("NOS", 0.30, math.radians(90.0), CARDIOID),
}


def psr_design(
    d: float,
    phi0: float,
    curves: WilliamsCurves | None = None,
    speed_of_sound: float = SPEED_OF_SOUND,
) -> PsrDesign:
    """Tangent-law design whose endpoints sit exactly on the Williams curves.

    The free parameter beta is found by bracketed root-finding on the
    constraint ICLD(phi0/2) = ICLD_W; the printed closed form is available
    as beta_closed_form() and agrees after branch reconciliation.
    """
    if curves is None:
        curves = WilliamsCurves.default()
    if d < 0.0:
        raise ValueError("d must be non-negative")
    ictd_max = d / speed_of_sound * math.sin(phi0 / 2.0)
    if ictd_max > SUMMING_LOCALIZATION_LIMIT + 1e-12:
        raise ValueError(
            f"d={d} m gives ICTD {ictd_max*1e3:.3f} ms, beyond the 1 ms regime"
        )
    icld_w = curves.left(ictd_max)

    def residual(beta: float) -> float:
        return 20.0 * math.log10(math.sin(phi0 + beta) / math.sin(beta)) - icld_w

    upper = min(math.pi / 2.0, math.pi - phi0) - 1e-9
    beta = brentq(residual, 1e-9, upper, xtol=1e-15, rtol=8.9e-16)
    return PsrDesign(d=d, phi0=phi0, ictd_max=ictd_max, icld_w=icld_w, beta=beta)


def beta_closed_form(icld_w: float, phi0: float) -> float:
    """Closed-form tangent-law parameter, branch-reconciled.

    The naive principal-branch arctangent of the published expression lands
    on beta' = pi - phi0 - beta, which flips the sign of the endpoint level;
    evaluating atan2(sin(phi0), R - cos(phi0)) with R = 10^(icld_w/20)
    selects the branch that actually satisfies the constraint.
    """
    ratio = 10.0 ** (icld_w / 20.0)
    return math.atan2(math.sin(phi0), ratio - math.cos(phi0))


def psr_curve(design: PsrDesign, theta_s: float) -> PanningPoint:
    """Panning point of the design at plane-wave angle theta_s (|.| <= phi0/2)."""
    half = design.phi0 / 2.0
    if abs(theta_s) > half + 1e-12:
        raise ValueError("theta_s outside the design's +-phi0/2 range")
    ictd = design.ictd_max * math.sin(theta_s) / math.sin(half)
    icld = 20.0 * math.log10(
        math.sin(half + design.beta + theta_s) / math.sin(half + design.beta - theta_s)
    )
    return PanningPoint(ictd=ictd, icld=icld)


def pattern_gain(arr: MicArrangement, theta_s: float, left: bool) -> float:
    """Signed directivity gain of one microphone toward theta_s."""
    aim = arr.base_angle / 2.0 if left else -arr.base_angle / 2.0
    if arr.directivity == OMNI:
        return 1.0
    if arr.directivity == CARDIOID:
        return 0.5 + 0.5 * math.cos(theta_s - aim)
    if arr.directivity == FIGURE8:
        return math.cos(theta_s - aim)
    if arr.directivity == PSR_CUSTOM:
        beta, _ = arr.psr_params
        sign = +1.0 if left else -1.0
        return math.sin(arr.base_angle / 2.0 + beta + sign * theta_s)
    raise ValueError(f"unknown directivity {arr.directivity!r}")


def polarity_inverted(arr: MicArrangement, theta_s: float) -> bool:
    """True when the two microphone gains have opposite signs (out of phase)."""
    return pattern_gain(arr, theta_s, True) * pattern_gain(arr, theta_s, False) < 0.0


def arrangement_curve(
    arr: MicArrangement,
    theta_s: float,
    speed_of_sound: float = SPEED_OF_SOUND,
) -> PanningPoint:
    """Panning point produced by the arrangement for a plane wave at theta_s.

    The level ratio uses gain magnitudes; use polarity_inverted() to detect
    out-of-phase conditions (they are excluded from coverage scans).
    """
    gain_left = pattern_gain(arr, theta_s, True)
    gain_right = pattern_gain(arr, theta_s, False)
    if abs(gain_left) < 1e-12 or abs(gain_right) < 1e-12:
        raise PatternNullError("pattern null")
    ictd = arr.distance / speed_of_sound * math.sin(theta_s)
    icld = 20.0 * math.log10(abs(gain_left) / abs(gain_right))
    return PanningPoint(ictd=ictd, icld=icld)


def psr_arrangement(design: PsrDesign, name: str | None = None) -> MicArrangement:
    """View a tangent-law design as a microphone arrangement."""
    return MicArrangement(
        name=name or f"PSR (d={design.d*100:.1f} cm)",
        distance=design.d,
        base_angle=design.phi0,
        directivity=PSR_CUSTOM,
        psr_params=(design.beta, design.icld_w),
    )


def coverage_angle(
    arr: MicArrangement,
    curves: WilliamsCurves | None = None,
    speed_of_sound: float = SPEED_OF_SOUND,
    step: float = math.radians(0.5),
) -> float:
    """Width of the largest symmetric angle range staying inside the curves.

    Scans outward from the midline in ``step`` increments; a plane-wave
    angle fails when its panning point leaves the Williams region, exceeds
    the 1 ms time limit, hits a pattern null, or inverts polarity.
    Returns 0 if even the midline fails.
    """
    if curves is None:
        curves = WilliamsCurves.default()

    def ok(theta: float) -> bool:
        try:
            point = arrangement_curve(arr, theta, speed_of_sound)
        except PatternNullError:
            return False
        if polarity_inverted(arr, theta):
            return False
        return curves.contains(point)

    if not ok(0.0):
        return 0.0
    last_good = 0.0
    k = 1
    while True:
        theta = k * step
        if theta > math.pi or not (ok(theta) and ok(-theta)):
            break
        last_good = theta
        k += 1
    return 2.0 * last_good
