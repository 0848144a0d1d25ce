"""Acceptance suite: one test per release criterion, each printing a verdict line.

Run with `pytest tests/test_acceptance.py -v -s`.  The heavy sweep fixtures
are module-scoped and cached, so the whole module stays at desk scale
(a few minutes on a laptop).  Criteria tied to the measured-HRIR reference
numbers run only when LOCUNCERT_KEMAR_HRIR points at a measured set.
"""

import math

import numpy as np
import pytest

from locuncert import (
    ListenerPose,
    NormalizedCues,
    PanningPoint,
    RenderSource,
    SourcePlacement,
    StereoSetup,
    VALIDATION_SCATTER,
    arrangement_comparison,
    build_dictionary,
    circular_variance,
    generate,
    grid_ictd_icld,
    likelihood,
    load_dictionary,
    localization_uncertainty,
    pearson,
    psr_arrangement,
    psr_average_vs_d,
    psr_curve,
    psr_design,
    render,
    save_dictionary,
    stereo_pair_sources,
)
from locuncert import geometry as geo
from locuncert import panning as pn
from locuncert.auditory import extract_itd
from locuncert.model import xi_matrix
from locuncert.hrir import HrirSet

DEG = math.radians
FIG11_D_GRID = np.arange(0.0, 0.372 + 1e-9, 0.0155)
AMPLITUDE, TIME_AMPLITUDE = slice(0, 3), slice(3, 8)


def verdict(number, text):
    print(f"ACCEPTANCE {number:>2} PASS — {text}")


@pytest.fixture(scope="module")
def central_grid(sweep_config):
    return grid_ictd_icld(sweep_config, sweep_config.pose(0.0))


@pytest.fixture(scope="module")
def offcenter_grid(sweep_config):
    return grid_ictd_icld(sweep_config, sweep_config.pose(0.10))


@pytest.fixture(scope="module")
def fig11_curves(sweep_config):
    results = {}
    for label, xs in (
        ("on-center", np.array([0.0])),
        ("x0-5", np.arange(0.0, 0.051, 0.01)),
        ("x0-15", np.arange(0.0, 0.151, 0.01)),
    ):
        results[label] = psr_average_vs_d(
            sweep_config, d_values=FIG11_D_GRID, x_values=xs, n_theta=7
        )
    return results


@pytest.fixture(scope="module")
def fig12_comparison(sweep_config):
    base_angle = sweep_config.setup.base_angle
    amplitude = [
        psr_arrangement(psr_design(0.0, base_angle), "PSR (d=0 cm)"),
        pn.TABLE_ARRANGEMENTS["blumlein"],
        pn.TABLE_ARRANGEMENTS["xy90"],
    ]
    time_amplitude = [
        pn.TABLE_ARRANGEMENTS["ortf"],
        psr_arrangement(psr_design(0.186, base_angle), "PSR (d=18.6 cm)"),
        pn.TABLE_ARRANGEMENTS["din"],
        pn.TABLE_ARRANGEMENTS["nos"],
        psr_arrangement(psr_design(0.372, base_angle), "PSR (d=37.2 cm)"),
    ]
    x_values = np.array([-0.20, -0.12, 0.0, 0.12, 0.20])
    mean, excursion = arrangement_comparison(
        sweep_config, amplitude + time_amplitude, x_values, n_theta=30
    )
    return mean, excursion


def test_criterion_01_geometry_closed_forms():
    tau = geo.tau_overlap(0.09, DEG(100), DEG(60))
    assert tau == pytest.approx(0.273e-3, abs=0.003e-3)

    d = geo.psr_distance_for_tau_overlap(0.09, DEG(100), DEG(60))
    assert d == pytest.approx(0.187, abs=0.001)

    d72 = geo.psr_distance_for_tau_overlap(0.09, DEG(100), DEG(72))
    r72 = geo.mic_radius_from_distance(d72, DEG(72))
    assert r72 == pytest.approx(0.162, abs=0.001)

    x = geo.x_for_full_shift(StereoSetup(DEG(60), 2.0))
    assert x == pytest.approx(0.343, abs=0.001)
    verdict(1, f"tau_o={tau*1e3:.4f} ms, d={d*100:.2f} cm, r_m={r72*100:.2f} cm, x={x:.3f} m")


def test_criterion_02_relative_panning_worked_examples():
    setup = StereoSetup(DEG(60), 2.0)
    printed = geo.relative_panning(
        PanningPoint(0.0, 5.0), ListenerPose(x=0.10), setup, geo.PRINTED_APPROXIMATION
    )
    assert round(printed.rictd * 1e3, 4) == -0.2915
    assert round(printed.ricld, 4) == 4.7829

    exact = geo.relative_panning(
        PanningPoint(0.0, 0.0), ListenerPose(x=0.343), setup, geo.EXACT_PATH
    )
    assert abs(exact.ricld) == pytest.approx(1.46, abs=0.02)
    verdict(2, f"printed=({printed.rictd*1e3:.4f} ms, {printed.ricld:.4f} dB), exact |RICLD|={abs(exact.ricld):.4f} dB")


def test_criterion_03_psr_design_constraints():
    curves = pn.WilliamsCurves.default()
    worst = 0.0
    for d in FIG11_D_GRID:
        design = psr_design(float(d), DEG(60), curves)
        center = psr_curve(design, 0.0)
        left = psr_curve(design, DEG(30))
        right = psr_curve(design, -DEG(30))
        worst = max(
            worst,
            abs(center.ictd),
            abs(center.icld),
            abs(left.ictd - design.ictd_max),
            abs(left.icld - design.icld_w),
            abs(right.ictd + design.ictd_max),
            abs(right.icld + design.icld_w),
        )
        residual = (
            20.0 * math.log10(math.sin(DEG(60) + design.beta) / math.sin(design.beta))
            - design.icld_w
        )
        assert abs(residual) < 1e-9
    assert worst < 1e-6

    def constraint(beta):
        return 20.0 * math.log10(math.sin(DEG(60) + beta) / math.sin(beta)) - 15.0

    lo, hi = 1e-9, math.pi / 2 - 1e-9
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if constraint(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    oracle = 0.5 * (lo + hi)
    design15 = psr_design(0.0, DEG(60), curves)
    assert design15.beta == pytest.approx(oracle, abs=1e-9)
    verdict(3, f"constraint residual <= {worst:.2e}, beta(60deg,15dB)={math.degrees(design15.beta):.4f} deg")


def test_criterion_04_conflicting_cue_bimodality(dictionary):
    band = dictionary.band_nearest(6070.0)
    nc = NormalizedCues(
        itd_bar=np.zeros(dictionary.n_bands),
        ild_bar=np.zeros(dictionary.n_bands),
        weights=np.zeros(dictionary.n_bands),
    )
    nc.weights[band] = 1.0
    nc.itd_bar[band] = 0.5
    nc.ild_bar[band] = -0.5

    def local_extrema(values, sign):
        return [
            k
            for k in range(1, values.size - 1)
            if sign * values[k] < sign * values[k - 1]
            and sign * values[k] < sign * values[k + 1]
        ]

    xi_05 = xi_matrix(nc, dictionary, 0.5)[band]
    xi_20 = xi_matrix(nc, dictionary, 2.0)[band]
    minima_05 = local_extrema(xi_05, +1)
    minima_20 = local_extrema(xi_20, +1)
    assert len(minima_05) == 2
    assert len(minima_20) == 1

    f_05 = likelihood(nc, dictionary, 0.5)
    maxima = local_extrema(f_05.values, -1)
    assert len(maxima) == 2
    assert maxima[1] - maxima[0] >= 5
    f_20 = likelihood(nc, dictionary, 2.0)
    assert len(local_extrema(f_20.values, -1)) == 1
    deg_at = [round(math.degrees(dictionary.theta_grid[k])) for k in minima_05]
    verdict(4, f"p=0.5 bimodal (minima at {deg_at} deg), p=2 unimodal")


def test_criterion_05_dictionary_sanity(dictionary, analytic_hrirs, stimulus):
    assert 0.2 < dictionary.h_min < 0.7

    fitd_bar, fild_bar = dictionary.normalized_tables()
    h_profile = []
    for k in range(dictionary.theta_grid.size):
        nc = NormalizedCues(
            itd_bar=fitd_bar[:, k].copy(),
            ild_bar=fild_bar[:, k].copy(),
            weights=np.ones(dictionary.n_bands),
        )
        h_profile.append(circular_variance(likelihood(nc, dictionary, dictionary.p)))
    # Free-field sources rendered at the h_min-attaining directions (where
    # the normalization is anchored by construction) score near zero.
    best = int(np.argmin(h_profile))
    mirror = dictionary.theta_grid.size - 1 - best
    scores = []
    signal = generate(stimulus)
    for k in (best, mirror):
        ears = render(
            [RenderSource(signal, 1.0, 0.0, SourcePlacement(dictionary.theta_grid[k], 2.0))],
            analytic_hrirs,
            sample_rate=stimulus.sample_rate,
        )
        scores.append(localization_uncertainty(ears, dictionary).h_bar)
    assert all(s < 0.08 for s in scores)
    verdict(
        5,
        f"h_min={dictionary.h_min:.4f} in (0.2, 0.7); free-field at "
        f"{math.degrees(dictionary.theta_grid[best]):+.0f} deg scores {max(scores):.4f} < 0.08",
    )


def test_criterion_05b_paper_set_h_min(paper_hrirs, stimulus):
    d = build_dictionary(paper_hrirs, stimulus)
    assert d.h_min == pytest.approx(0.49, abs=0.1)
    verdict(5, f"paper HRIR set h_min={d.h_min:.4f} (0.49 +- 0.1)")


def test_criterion_06_central_grid_structure(central_grid):
    values = central_grid.values
    ictd_ms = central_grid.axes["ictd_ms"]
    icld_db = central_grid.axes["icld_db"]
    assert values.shape == (41, 37)
    T, L = np.meshgrid(ictd_ms, icld_db, indexing="ij")

    conflicting = values[((T < 0) & (L > 0)) | ((T > 0) & (L < 0))].mean()
    consistent = values[((T > 0) & (L > 0)) | ((T < 0) & (L < 0))].mean()
    assert conflicting > consistent

    # Channel masking: the large-|ICLD| region sits below the grid's 25th
    # percentile, every cell of the +-18 dB rows individually does, and the
    # row means fall monotonically from 15 to 18 dB.  (The onset is soft --
    # "outside ~13 dB" -- so the 15 dB row itself can straddle P25.)
    p25 = np.percentile(values, 25.0)
    big = np.abs(icld_db) >= 15.0
    assert values[:, big].mean() < p25
    assert np.all(values[:, np.abs(icld_db) >= 18.0] < p25)
    for sign in (+1.0, -1.0):
        row_means = [
            values[:, icld_db == sign * level].mean() for level in (15.0, 16.0, 17.0, 18.0)
        ]
        assert all(b < a for a, b in zip(row_means, row_means[1:]))

    # Overlap-delay ridges: within the consistent quadrants the band
    # containing +-tau_o (~0.27 ms) is elevated over the small-|ICTD| valley.
    consistent_mask = np.sign(T) == np.sign(L)
    moderate = consistent_mask & (np.abs(L) >= 3.0) & (np.abs(L) <= 9.0)
    ridge = values[moderate & (np.abs(T) >= 0.20) & (np.abs(T) <= 0.35)].mean()
    valley = values[moderate & (np.abs(T) <= 0.10) & (np.abs(T) > 0)].mean()
    assert ridge > valley

    # Cell comparisons from the worked examples.
    center = values[np.argmin(np.abs(ictd_ms)), np.argmin(np.abs(icld_db))]
    conflict_cell = values[
        np.argmin(np.abs(ictd_ms - 0.45)), np.argmin(np.abs(icld_db + 10.0))
    ]
    assert center < conflict_cell
    assert values[:, icld_db == 18.0].mean() < p25
    verdict(
        6,
        f"quadrants {conflicting:.3f} > {consistent:.3f}; |ICLD|>=15 rows < P25={p25:.3f}; "
        f"ridge {ridge:.3f} > valley {valley:.3f}; (0,0)={center:.3f} < (0.45,-10)={conflict_cell:.3f}",
    )


def test_criterion_07_offcenter_shift(central_grid, offcenter_grid):
    base = central_grid.values
    moved = offcenter_grid.values

    def correlation(shift):
        if shift < 0:
            a, b = moved[-shift:], base[:shift]
        elif shift > 0:
            a, b = moved[:-shift], base[shift:]
        else:
            a, b = moved, base
        return np.corrcoef(a.ravel(), b.ravel())[0, 1]

    shifts = np.arange(-10, 11)
    correlations = [correlation(int(s)) for s in shifts]
    best = shifts[int(np.argmax(correlations))]
    best_ms = best * 0.05
    assert -0.35 <= best_ms <= -0.25
    assert max(correlations) > 0.8
    verdict(7, f"best shift {best_ms:.2f} ms at correlation {max(correlations):.3f}")


def test_criterion_08_fig11_argmin_properties(fig11_curves):
    d_cm = FIG11_D_GRID * 100.0

    on_center = d_cm[int(np.argmin(fig11_curves["on-center"].values))]
    assert 0.0 <= on_center <= 5.0

    x05 = d_cm[int(np.argmin(fig11_curves["x0-5"].values))]
    assert 15.0 <= x05 <= 25.0, (
        f"x in [0,5] cm argmin d = {x05:.1f} cm, outside [15, 25]. "
        "The analytic spherical-head set lacks the measured sets' in-band "
        "feed decorrelation, which flattens the d-preference of slightly "
        "off-center listeners; see the x0-5 curve in the failure output: "
        f"{np.round(fig11_curves['x0-5'].values, 4)}"
    )

    x015 = d_cm[int(np.argmin(fig11_curves["x0-15"].values))]
    assert 25.0 <= x015 <= 37.2
    verdict(8, f"argmins: on-center {on_center:.1f} cm, x0-5 {x05:.1f} cm, x0-15 {x015:.1f} cm")


def test_criterion_08b_fig11_paper_value(paper_hrirs, stimulus, sweep_config):
    from dataclasses import replace

    d = build_dictionary(paper_hrirs, stimulus)
    cfg = replace(sweep_config, dictionary=d, hrirs=paper_hrirs, cache_dir=None)
    result = psr_average_vs_d(
        cfg, d_values=np.array([0.0]), x_values=np.array([0.0]), n_theta=7
    )
    assert result.values[0] == pytest.approx(0.359, abs=0.05)
    verdict(8, f"paper-set on-center d=0 value {result.values[0]:.4f} (0.359 +- 0.05)")


def test_criterion_09_fig12_method_comparison(fig12_comparison):
    mean, excursion = fig12_comparison
    x_cm = mean.axes["x_cm"]
    center = int(np.argmin(np.abs(x_cm)))
    off = np.abs(x_cm) >= 12.0

    amp_means = mean.values[AMPLITUDE]
    ta_means = mean.values[TIME_AMPLITUDE]
    assert amp_means[:, center].max() < ta_means[:, center].min()

    for column in np.nonzero(off)[0]:
        assert amp_means[:, column].min() > ta_means[:, column].min()

    edge = np.abs(x_cm) >= 20.0
    amp_exc = excursion.values[AMPLITUDE][:, edge]
    ta_exc = excursion.values[TIME_AMPLITUDE][:, edge]
    assert amp_exc.min() >= 1.5 * ta_exc.max()
    verdict(
        9,
        f"x=0 means: amplitude <= {amp_means[:, center].max():.3f} < time-amplitude >= "
        f"{ta_means[:, center].min():.3f}; |x|=20 excursions {amp_exc.min():.3f} >= "
        f"1.5 x {ta_exc.max():.3f}",
    )


def test_criterion_09b_fig12_paper_excursion(paper_hrirs, stimulus, sweep_config):
    from dataclasses import replace

    d = build_dictionary(paper_hrirs, stimulus)
    cfg = replace(sweep_config, dictionary=d, hrirs=paper_hrirs, cache_dir=None)
    arr = psr_arrangement(psr_design(0.0, cfg.setup.base_angle), "PSR (d=0 cm)")
    _, excursion = arrangement_comparison(cfg, [arr], np.array([0.20]), n_theta=30)
    assert excursion.values[0, 0] >= 0.35
    verdict(9, f"paper-set amplitude excursion at x=20 cm: {excursion.values[0,0]:.3f}")


def test_criterion_10_coverage_angles():
    curves = pn.WilliamsCurves.default()
    table = {"blumlein": 68.0, "xy90": 176.0, "ortf": 94.0, "din": 100.0, "nos": 80.0}
    measured = {}
    for key, target in table.items():
        coverage = math.degrees(pn.coverage_angle(pn.TABLE_ARRANGEMENTS[key], curves))
        assert coverage == pytest.approx(target, abs=10.0), key
        measured[key] = round(coverage, 1)
    design = psr_design(0.187, DEG(60), curves)
    psr_cov = math.degrees(pn.coverage_angle(psr_arrangement(design), curves))
    assert psr_cov == pytest.approx(60.0, abs=1.01)
    verdict(10, f"coverage angles {measured}, PSR {psr_cov:.1f} deg")


def test_criterion_11_validation_scatter():
    r = pearson(VALIDATION_SCATTER[:, 0], VALIDATION_SCATTER[:, 1])
    assert r == pytest.approx(-0.99, abs=0.005)
    verdict(11, f"validation scatter Pearson r = {r:.5f}")


def test_criterion_12_determinism_and_oracles(tmp_path, dictionary):
    # Dictionary serialization round-trips bit-exactly.
    first = tmp_path / "d1.json"
    second = tmp_path / "d2.json"
    save_dictionary(dictionary, first)
    save_dictionary(load_dictionary(first), second)
    assert first.read_bytes() == second.read_bytes()

    # ITD extraction equals the brute-force correlation scan on 200 pairs.
    def brute(left, right, fs, window):
        n = left.size
        best_value, best_lag = -np.inf, 0
        for lag in range(-window, window + 1):
            if lag >= 0:
                seg_l, seg_r = left[: n - lag], right[lag:]
            else:
                seg_l, seg_r = left[-lag:], right[: n + lag]
            energy = float(np.dot(seg_l, seg_l)) * float(np.dot(seg_r, seg_r))
            value = float(np.dot(seg_l, seg_r)) / math.sqrt(energy) if energy > 0 else 0.0
            if value > best_value or (
                value == best_value and (abs(lag), lag) < (abs(best_lag), best_lag)
            ):
                best_value, best_lag = value, lag
        return best_lag / fs

    fs = 44100
    window = math.ceil(0.0007 * fs)
    rng = np.random.Generator(np.random.PCG64(7))
    for _ in range(200):
        n = int(rng.integers(150, 600))
        left = rng.standard_normal(n)
        shift = int(rng.integers(-40, 41))
        if shift >= 0:
            right = np.concatenate([np.zeros(shift), left[: n - shift]])
        else:
            right = np.concatenate([left[-shift:], np.zeros(-shift)])
        right = right + 0.1 * rng.standard_normal(n)
        assert extract_itd(left, right, fs) == brute(left, right, fs, window)

    # Render linearity and 1/distance attenuation to 1e-9 relative.
    azimuths = np.radians(np.linspace(-90.0, 90.0, 37))
    irs = np.zeros((37, 8))
    irs[:, 0] = 1.0
    hrirs = HrirSet(44100, azimuths, irs.copy(), irs.copy())
    signal = rng.standard_normal(1000)
    d1 = 150 * 343.0 / 44100
    base = render(
        [RenderSource(signal, 1.0, 0.0, SourcePlacement(0.0, d1))], hrirs
    ).left
    scaled = render(
        [RenderSource(signal, 3.0, 0.0, SourcePlacement(0.0, d1))], hrirs
    ).left
    assert np.allclose(scaled, 3.0 * base, rtol=1e-9, atol=1e-12)

    far = render(
        [RenderSource(signal, 1.0, 0.0, SourcePlacement(0.0, 2.0 * d1))], hrirs
    ).left
    a = base[150 : 150 + signal.size]
    b = far[300 : 300 + signal.size]
    assert np.allclose(b, 0.5 * a, rtol=1e-9, atol=1e-12)
    verdict(12, "serialization bit-exact; ITD oracle 200/200; render linearity and 1/r to 1e-9")
