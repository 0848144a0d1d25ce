"""Loudness weighting of critical bands via ISO 226:2003 equal-loudness contours.

Band SPLs are derived from the band energy fractions of a configurable
broadband calibration level (the playback level is not knowable from the
signals alone, so it is an explicit, recorded parameter).  SPL converts to
phon through the standard's closed-form contour inversion, and phon maps to
a weight that halves for every 10 phon below the loudest band.

The contour parameters are the published tabulated values at the standard's
29 reference frequencies (20 Hz .. 12.5 kHz).  Between reference points the
parameters are interpolated on a log-frequency axis; outside the table the
edge values are held (relevant only for the topmost band of the default
filterbank).  Levels below the 0-phon contour get weight zero.
"""

from __future__ import annotations

import math

import numpy as np

# ISO 226:2003 reference frequencies and contour parameters.
_FREQ = np.array([
    20.0, 25.0, 31.5, 40.0, 50.0, 63.0, 80.0, 100.0, 125.0, 160.0,
    200.0, 250.0, 315.0, 400.0, 500.0, 630.0, 800.0, 1000.0, 1250.0, 1600.0,
    2000.0, 2500.0, 3150.0, 4000.0, 5000.0, 6300.0, 8000.0, 10000.0, 12500.0,
])
_ALPHA = np.array([
    0.532, 0.506, 0.480, 0.455, 0.432, 0.409, 0.387, 0.367, 0.349, 0.330,
    0.315, 0.301, 0.288, 0.276, 0.267, 0.259, 0.253, 0.250, 0.246, 0.244,
    0.243, 0.243, 0.243, 0.242, 0.242, 0.245, 0.254, 0.271, 0.301,
])
_L_U = np.array([
    -31.6, -27.2, -23.0, -19.1, -15.9, -13.0, -10.3, -8.1, -6.2, -4.5,
    -3.1, -2.0, -1.1, -0.4, 0.0, 0.3, 0.5, 0.0, -2.7, -4.1,
    -1.0, 1.7, 2.5, 1.2, -2.1, -7.1, -11.2, -10.7, -3.1,
])
_T_F = np.array([
    78.5, 68.7, 59.5, 51.1, 44.0, 37.5, 31.5, 26.5, 22.1, 17.9,
    14.4, 11.4, 8.6, 6.2, 4.4, 3.0, 2.2, 2.4, 3.5, 1.7,
    -1.3, -4.2, -6.0, -5.4, -1.5, 6.0, 12.6, 13.9, 12.3,
])
_LOG_FREQ = np.log10(_FREQ)


def _contour_parameters(frequency: float) -> tuple[float, float, float]:
    f = min(max(frequency, _FREQ[0]), _FREQ[-1])
    lf = math.log10(f)
    alpha = float(np.interp(lf, _LOG_FREQ, _ALPHA))
    l_u = float(np.interp(lf, _LOG_FREQ, _L_U))
    t_f = float(np.interp(lf, _LOG_FREQ, _T_F))
    return alpha, l_u, t_f


def spl_from_phon(phon: float, frequency: float) -> float:
    """Sound pressure level on the ``phon`` equal-loudness contour."""
    alpha, l_u, t_f = _contour_parameters(frequency)
    a_f = 4.47e-3 * (10.0 ** (0.025 * phon) - 1.15) + (
        0.4 * 10.0 ** ((t_f + l_u) / 10.0 - 9.0)
    ) ** alpha
    return 10.0 / alpha * math.log10(a_f) - l_u + 94.0


def phon_from_spl(spl: float, frequency: float) -> float:
    """Loudness level of a tone at ``spl`` dB.

    Levels under the hearing threshold come out negative (the standard's
    inverse keeps a small positive floor inside the log, so -inf appears
    only in pathological parameter corners).
    """
    alpha, l_u, t_f = _contour_parameters(frequency)
    b_f = (
        (0.4 * 10.0 ** ((spl + l_u) / 10.0 - 9.0)) ** alpha
        - (0.4 * 10.0 ** ((t_f + l_u) / 10.0 - 9.0)) ** alpha
        + 0.005135
    )
    if b_f <= 0.0:
        return -math.inf
    return 40.0 * math.log10(b_f) + 94.0


def loudness_weights(
    band_energies: np.ndarray,
    center_frequencies: np.ndarray,
    calibration_spl: float = 70.0,
) -> np.ndarray:
    """Per-band weights: 1 for the loudest band, halved per 10 phon below it.

    ``calibration_spl`` is the broadband SPL assigned to the total energy;
    each band's SPL is that level plus its energy fraction in dB.  Bands
    with zero energy or below the 0-phon contour weigh zero.
    """
    energies = np.asarray(band_energies, dtype=float)
    if np.any(energies < 0.0):
        raise ValueError("band energies must be non-negative")
    total = energies.sum()
    if total <= 0.0:
        raise ValueError("all band energies are zero")

    phons = np.full(energies.size, -math.inf)
    for i, (energy, fc) in enumerate(zip(energies, center_frequencies)):
        if energy <= 0.0:
            continue
        spl = calibration_spl + 10.0 * math.log10(energy / total)
        phons[i] = phon_from_spl(spl, fc)

    weights = np.zeros(energies.size)
    loudest = phons.max()
    if not math.isfinite(loudest):
        return weights
    audible = phons >= 0.0  # 0-phon contour is the validity floor
    weights[audible] = 2.0 ** ((phons[audible] - loudest) / 10.0)
    return weights
