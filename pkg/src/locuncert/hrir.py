"""Head-related impulse response sets.

Two sources of HRIRs are supported: an analytic spherical-head set that the
package can synthesize on its own, and measured sets supplied through a
small JSON exchange format::

    {"sample_rate": 44100,
     "metadata": "free-form provenance string",
     "entries": [{"azimuth_deg": -90.0, "left": [...], "right": [...]}, ...]}

Entries must be sorted by strictly increasing azimuth and cover at least
[-90, +90] degrees; all impulse responses must share one length.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import SPEED_OF_SOUND

_REQUIRED_COVERAGE = math.radians(90.0)


class HrirFormatError(ValueError):
    """Raised when an HRIR exchange file fails validation."""


@dataclass
class HrirSet:
    sample_rate: int
    azimuths: np.ndarray  # radians, strictly increasing
    left: np.ndarray  # (n_entries, ir_length)
    right: np.ndarray
    metadata: str = ""

    def __post_init__(self):
        self.azimuths = np.asarray(self.azimuths, dtype=float)
        self.left = np.atleast_2d(np.asarray(self.left, dtype=float))
        self.right = np.atleast_2d(np.asarray(self.right, dtype=float))
        if self.azimuths.size == 0:
            raise HrirFormatError("empty entry list")
        if np.any(np.diff(self.azimuths) <= 0.0):
            raise HrirFormatError("unsorted/duplicate azimuths")
        if self.left.shape != self.right.shape or self.left.shape[0] != self.azimuths.size:
            raise HrirFormatError("inconsistent IR lengths")
        if self.azimuths[0] > -_REQUIRED_COVERAGE + 1e-9 or (
            self.azimuths[-1] < _REQUIRED_COVERAGE - 1e-9
        ):
            raise HrirFormatError("azimuth coverage must include [-90, +90] degrees")

    @property
    def ir_length(self) -> int:
        return self.left.shape[1]

    def select(self, azimuth: float) -> tuple[np.ndarray, np.ndarray]:
        """Return the (left, right) IR pair of the nearest grid azimuth."""
        if azimuth < self.azimuths[0] - 1e-9 or azimuth > self.azimuths[-1] + 1e-9:
            raise ValueError(
                f"azimuth {math.degrees(azimuth):.1f} deg outside HRIR coverage "
                f"[{math.degrees(self.azimuths[0]):.1f}, "
                f"{math.degrees(self.azimuths[-1]):.1f}] deg"
            )
        idx = int(np.argmin(np.abs(self.azimuths - azimuth)))
        return self.left[idx], self.right[idx]


def default_azimuth_grid() -> np.ndarray:
    """-90..+90 degrees in 5-degree steps (37 directions), in radians."""
    return np.radians(np.arange(-90.0, 90.0 + 1e-9, 5.0))


def spherical_head_hrirs(
    head_radius: float = 0.09,
    ear_angle: float = math.radians(100.0),
    sample_rate: int = 44100,
    azimuths: np.ndarray | None = None,
    reference_distance: float = 2.0,
    ir_length: int = 128,
) -> HrirSet:
    """Analytic HRIR set for a rigid spherical head.

    Each ear gets the exact wrap-around path delay and 1/d spread relative
    to ``reference_distance``, plus (when geometrically shadowed) a
    first-order low-pass whose cutoff falls with incidence angle.  The set
    is exactly left/right symmetric on a symmetric azimuth grid.
    """
    from .render import fractional_delay_kernel  # local import, avoids cycle

    if azimuths is None:
        azimuths = default_azimuth_grid()
    azimuths = np.asarray(azimuths, dtype=float)
    theta_0 = math.acos(min(1.0, head_radius / reference_distance))
    # Base delay keeps the leading (negative-differential) paths causal.
    base_delay = head_radius / SPEED_OF_SOUND * (1.0 + math.pi) + 2.0 / sample_rate

    def left_ear_ir(source_azimuth: float) -> np.ndarray:
        incidence = abs(_wrap(source_azimuth - ear_angle))
        if incidence <= theta_0:
            d_ear = math.sqrt(
                reference_distance ** 2
                + head_radius ** 2
                - 2.0 * reference_distance * head_radius * math.cos(incidence)
            )
        else:
            d_ear = math.sqrt(reference_distance ** 2 - head_radius ** 2) + (
                head_radius * (incidence - theta_0)
            )
        delay = (d_ear - reference_distance) / SPEED_OF_SOUND + base_delay
        ir = np.zeros(ir_length)
        kernel, offset = fractional_delay_kernel(delay * sample_rate)
        stop = min(ir_length, offset + kernel.size)
        ir[offset:stop] = kernel[: stop - offset]
        ir *= reference_distance / d_ear
        if incidence > theta_0:
            ir = _one_pole_lowpass(ir, _shadow_cutoff(incidence, theta_0), sample_rate)
        return ir

    # The right ear is the left ear of the mirrored scene; evaluating the
    # same code path keeps the set exactly left/right symmetric.
    left_irs = np.vstack([left_ear_ir(float(az)) for az in azimuths])
    right_irs = np.vstack([left_ear_ir(-float(az)) for az in azimuths])

    return HrirSet(
        sample_rate=sample_rate,
        azimuths=azimuths,
        left=left_irs,
        right=right_irs,
        metadata=(
            f"analytic spherical head rh={head_radius} m, "
            f"ear_angle={math.degrees(ear_angle):.1f} deg, "
            f"ref={reference_distance} m"
        ),
    )


def load_hrir_set(path) -> HrirSet:
    """Load and validate an HRIR set from the JSON exchange format."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise HrirFormatError(f"malformed HRIR file: {exc}") from exc
    if not isinstance(doc, dict) or "sample_rate" not in doc or "entries" not in doc:
        raise HrirFormatError("malformed HRIR file: missing sample_rate/entries")
    entries = doc["entries"]
    if not isinstance(entries, list) or not entries:
        raise HrirFormatError("empty entry list")
    azimuths = []
    left = []
    right = []
    for entry in entries:
        try:
            azimuths.append(math.radians(float(entry["azimuth_deg"])))
            left.append(np.asarray(entry["left"], dtype=float))
            right.append(np.asarray(entry["right"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            raise HrirFormatError(f"malformed HRIR entry: {exc}") from exc
    lengths = {ir.size for ir in left} | {ir.size for ir in right}
    if len(lengths) != 1:
        raise HrirFormatError("inconsistent IR lengths")
    return HrirSet(
        sample_rate=int(doc["sample_rate"]),
        azimuths=np.array(azimuths),
        left=np.vstack(left),
        right=np.vstack(right),
        metadata=str(doc.get("metadata", "")),
    )


def save_hrir_set(hrirs: HrirSet, path) -> None:
    """Write an HrirSet in the JSON exchange format."""
    doc = {
        "sample_rate": hrirs.sample_rate,
        "metadata": hrirs.metadata,
        "entries": [
            {
                "azimuth_deg": math.degrees(az),
                "left": hrirs.left[i].tolist(),
                "right": hrirs.right[i].tolist(),
            }
            for i, az in enumerate(hrirs.azimuths)
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def _shadow_cutoff(
    incidence: float,
    theta_0: float,
    f_open: float = 18000.0,
    f_shadow: float = 250.0,
) -> float:
    # Log-interpolated cutoff: f_open at grazing incidence, f_shadow at the
    # antipode, falling quickly at moderate incidence (sqrt shaping) the way
    # rigid-sphere diffraction does.  Gives head-shadow ILDs that grow with
    # frequency, and in-band phase dispersion between the two stereo feeds
    # at the shadowed ear.
    frac = math.sqrt((incidence - theta_0) / (math.pi - theta_0))
    return f_open * (f_shadow / f_open) ** frac


def _one_pole_lowpass(x: np.ndarray, cutoff: float, sample_rate: int) -> np.ndarray:
    from scipy.signal import lfilter

    a = math.exp(-2.0 * math.pi * cutoff / sample_rate)
    return lfilter([1.0 - a], [1.0, -a], x)


def _wrap(angle: float) -> float:
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi
