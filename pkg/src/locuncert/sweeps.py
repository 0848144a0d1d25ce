"""Experiment harness: parameter sweeps of the uncertainty model.

Every sweep reduces to scoring independent cells (one stereo panning point
rendered for one listener pose), so cells can be cached and evaluated in
parallel while keeping results bit-identical to the sequential path.  Each
cell reuses a single stimulus realization with the configured seed; only
the dictionary averages over realizations.

Results are written as CSV (axis columns plus h_bar) and JSON (the full
SweepResult including metadata); file names derive from the config hash so
reruns with identical configuration overwrite their own outputs.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .geometry import ListenerPose, PanningPoint, StereoSetup
from .hrir import HrirSet
from .model import (
    DEFAULT_CALIBRATION_SPL,
    DEFAULT_P,
    FreeFieldDictionary,
    localization_uncertainty,
)
from .panning import (
    MicArrangement,
    PsrDesign,
    WilliamsCurves,
    arrangement_curve,
    coverage_angle,
    psr_curve,
    psr_design,
)
from .render import render, stereo_pair_sources
from .stimuli import Stimulus, generate

# Grid defaults mirroring the reference figures.
DEFAULT_ICTD_GRID_S = np.arange(-1.0e-3, 1.0e-3 + 1e-12, 0.05e-3)  # 41 points
DEFAULT_ICLD_GRID_DB = np.arange(-18.0, 18.0 + 1e-9, 1.0)  # 37 points
DEFAULT_D_GRID_M = np.arange(0.0, 0.372 + 1e-12, 0.0155)  # 25 points
DEFAULT_X_GRID_M = np.arange(-0.20, 0.20 + 1e-12, 0.01)  # 41 points

# Validation fixture: 16 (subjective score, model estimate) pairs from the
# published listening-test scatter.  Their Pearson correlation is -0.99.
VALIDATION_SCATTER = np.array([
    (81.4444, 0.351354),
    (83.6667, 0.372829),
    (80.4074, 0.373022),
    (83.1481, 0.321041),
    (82.3333, 0.383437),
    (80.7778, 0.358197),
    (78.0370, 0.405843),
    (83.9259, 0.316886),
    (73.7241, 0.528557),
    (65.8966, 0.596204),
    (73.6207, 0.523467),
    (73.2069, 0.529843),
    (64.8333, 0.689003),
    (51.6389, 0.862396),
    (62.1111, 0.678035),
    (58.5556, 0.787002),
])


@dataclass
class SweepConfig:
    setup: StereoSetup
    stimulus: Stimulus
    dictionary: FreeFieldDictionary
    hrirs: HrirSet
    p: float = DEFAULT_P
    calibration_spl: float = DEFAULT_CALIBRATION_SPL
    workers: int = 1
    cache_dir: str | None = None
    head_radius: float = 0.09
    ear_angle: float = math.radians(100.0)

    def pose(self, x: float, y: float = 0.0) -> ListenerPose:
        return ListenerPose(
            x=x, y=y, head_radius=self.head_radius, ear_angle=self.ear_angle
        )


@dataclass
class SweepResult:
    axes: dict  # ordered name -> 1-D array; units in the names
    values: np.ndarray  # h_bar, shape = axis lengths in order
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = tuple(len(v) for v in self.axes.values())
        if tuple(self.values.shape) != shape:
            raise ValueError(f"value shape {self.values.shape} != axes {shape}")
        if np.any(self.values < -1e-9) or np.any(self.values > 1.05):
            raise ValueError("h_bar values outside the sane [0, 1.05] range")


def config_hash(config: SweepConfig) -> str:
    """Stable hash of everything that determines cell values."""
    payload = {
        "setup": [
            config.setup.base_angle,
            config.setup.speaker_distance,
            config.setup.speed_of_sound,
        ],
        "stimulus": [
            config.stimulus.kind,
            config.stimulus.duration,
            config.stimulus.taper_fraction,
            config.stimulus.seed,
            config.stimulus.sample_rate,
        ],
        "dictionary": {
            "provenance": config.dictionary.provenance,
            "h_min": config.dictionary.h_min,
            "p": config.dictionary.p,
        },
        "hrir": config.hrirs.metadata,
        "p": config.p,
        "calibration_spl": config.calibration_spl,
        "head": [config.head_radius, config.ear_angle],
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def score_panning_point(
    config: SweepConfig, point: PanningPoint, pose: ListenerPose
) -> float:
    """h_bar of one stereo condition; the harness's single scoring path."""
    signal = generate(config.stimulus)
    sources = stereo_pair_sources(point, config.setup, pose, signal)
    ears = render(
        sources,
        config.hrirs,
        speed_of_sound=config.setup.speed_of_sound,
        sample_rate=config.stimulus.sample_rate,
    )
    result = localization_uncertainty(
        ears, config.dictionary, p=config.p, calibration_spl=config.calibration_spl
    )
    return result.h_bar


# Cell = (ictd, icld, x, y); module-level worker state for process pools.
_WORKER_CONFIG: SweepConfig | None = None


def _init_worker(config: SweepConfig) -> None:
    global _WORKER_CONFIG
    _WORKER_CONFIG = config


def _score_cell_worker(cell: tuple) -> float:
    ictd, icld, x, y = cell
    config = _WORKER_CONFIG
    return score_panning_point(
        config, PanningPoint(ictd=ictd, icld=icld), config.pose(x, y)
    )


def _evaluate_cells(config: SweepConfig, cells: list[tuple]) -> list[float]:
    """Evaluate cells deterministically, optionally in parallel, with caching."""
    cache = _CellCache(config) if config.cache_dir else None
    values: list[float | None] = [None] * len(cells)
    missing: list[int] = []
    for i, cell in enumerate(cells):
        hit = cache.get(cell) if cache else None
        if hit is None:
            missing.append(i)
        else:
            values[i] = hit

    todo = [cells[i] for i in missing]
    if todo:
        if config.workers > 1:
            with ProcessPoolExecutor(
                max_workers=config.workers,
                initializer=_init_worker,
                initargs=(config,),
            ) as pool:
                computed = list(pool.map(_score_cell_worker, todo, chunksize=8))
        else:
            _init_worker(config)
            computed = [_score_cell_worker(cell) for cell in todo]
        for i, value in zip(missing, computed):
            values[i] = value
            if cache:
                cache.put(cells[i], value)
    if cache:
        cache.save()
    return values


class _CellCache:
    """One JSON file of {cell key: h_bar} per config hash."""

    def __init__(self, config: SweepConfig):
        os.makedirs(config.cache_dir, exist_ok=True)
        self.path = os.path.join(config.cache_dir, f"cells-{config_hash(config)}.json")
        self.data: dict[str, float] = {}
        if os.path.exists(self.path):
            with open(self.path, "r", encoding="utf-8") as fh:
                self.data = json.load(fh)
        self.dirty = False

    @staticmethod
    def key(cell: tuple) -> str:
        return ",".join(repr(float(v)) for v in cell)

    def get(self, cell: tuple):
        return self.data.get(self.key(cell))

    def put(self, cell: tuple, value: float) -> None:
        self.data[self.key(cell)] = value
        self.dirty = True

    def save(self) -> None:
        if not self.dirty:
            return
        _atomic_write_text(
            self.path, json.dumps(self.data, sort_keys=True, separators=(",", ":"))
        )


def _base_metadata(config: SweepConfig, started: float) -> dict:
    return {
        "config_hash": config_hash(config),
        "dictionary_provenance": config.dictionary.provenance,
        "runtime_s": time.monotonic() - started,
    }


def grid_ictd_icld(
    config: SweepConfig,
    pose: ListenerPose,
    ictd_values: np.ndarray | None = None,
    icld_values: np.ndarray | None = None,
) -> SweepResult:
    """h_bar over an ICTD x ICLD grid for one listener pose."""
    started = time.monotonic()
    ictd_values = DEFAULT_ICTD_GRID_S if ictd_values is None else np.asarray(ictd_values, float)
    icld_values = DEFAULT_ICLD_GRID_DB if icld_values is None else np.asarray(icld_values, float)
    cells = [
        (float(t), float(l), pose.x, pose.y)
        for t in ictd_values
        for l in icld_values
    ]
    values = np.array(_evaluate_cells(config, cells)).reshape(
        ictd_values.size, icld_values.size
    )
    meta = _base_metadata(config, started)
    meta["pose"] = {"x_m": pose.x, "y_m": pose.y}
    return SweepResult(
        axes={"ictd_ms": ictd_values * 1e3, "icld_db": icld_values.copy()},
        values=values,
        metadata=meta,
    )


def spatial_map(
    config: SweepConfig,
    x_values: np.ndarray,
    y_values: np.ndarray,
    points: list[PanningPoint],
) -> SweepResult:
    """Mean h_bar of a panning-point set as a function of listener position."""
    started = time.monotonic()
    x_values = np.asarray(x_values, dtype=float)
    y_values = np.asarray(y_values, dtype=float)
    if not points:
        raise ValueError("at least one panning point is required")
    cells = [
        (p.ictd, p.icld, float(x), float(y))
        for x in x_values
        for y in y_values
        for p in points
    ]
    values = np.array(_evaluate_cells(config, cells)).reshape(
        x_values.size, y_values.size, len(points)
    ).mean(axis=2)
    meta = _base_metadata(config, started)
    meta["n_points"] = len(points)
    return SweepResult(
        axes={"x_m": x_values.copy(), "y_m": y_values.copy()},
        values=values,
        metadata=meta,
    )


def psr_surface(
    config: SweepConfig,
    d_values: np.ndarray,
    theta_s_values: np.ndarray,
    pose: ListenerPose,
    curves: WilliamsCurves | None = None,
) -> SweepResult:
    """h_bar over inter-microphone distance x plane-wave angle for one pose."""
    started = time.monotonic()
    d_values = np.asarray(d_values, dtype=float)
    theta_s_values = np.asarray(theta_s_values, dtype=float)
    if curves is None:
        curves = WilliamsCurves.default()
    cells = []
    for d in d_values:
        design = psr_design(d, config.setup.base_angle, curves, config.setup.speed_of_sound)
        for theta in theta_s_values:
            point = psr_curve(design, float(theta))
            cells.append((point.ictd, point.icld, pose.x, pose.y))
    values = np.array(_evaluate_cells(config, cells)).reshape(
        d_values.size, theta_s_values.size
    )
    meta = _base_metadata(config, started)
    meta["pose"] = {"x_m": pose.x, "y_m": pose.y}
    return SweepResult(
        axes={"d_cm": d_values * 100.0, "theta_s_deg": np.degrees(theta_s_values)},
        values=values,
        metadata=meta,
    )


def psr_average_vs_d(
    config: SweepConfig,
    d_values: np.ndarray | None = None,
    x_values: np.ndarray | None = None,
    n_theta: int = 7,
    curves: WilliamsCurves | None = None,
) -> SweepResult:
    """Mean h_bar per distance, averaged over midline..left-speaker angles.

    ``x_values`` are the lateral listener displacements averaged over
    (default: just the center).  The angle set is a uniform grid over
    [0, phi0/2] including both endpoints.
    """
    started = time.monotonic()
    d_values = DEFAULT_D_GRID_M if d_values is None else np.asarray(d_values, float)
    x_values = np.array([0.0]) if x_values is None else np.asarray(x_values, float)
    theta_set = np.linspace(0.0, config.setup.base_angle / 2.0, n_theta)
    if curves is None:
        curves = WilliamsCurves.default()
    cells = []
    for d in d_values:
        design = psr_design(d, config.setup.base_angle, curves, config.setup.speed_of_sound)
        for x in x_values:
            for theta in theta_set:
                point = psr_curve(design, float(theta))
                cells.append((point.ictd, point.icld, float(x), 0.0))
    values = np.array(_evaluate_cells(config, cells)).reshape(
        d_values.size, x_values.size * theta_set.size
    ).mean(axis=1)
    meta = _base_metadata(config, started)
    meta["x_values_m"] = x_values.tolist()
    meta["n_theta"] = n_theta
    return SweepResult(
        axes={"d_cm": d_values * 100.0}, values=values, metadata=meta
    )


def arrangement_comparison(
    config: SweepConfig,
    arrangements: list[MicArrangement],
    x_values: np.ndarray | None = None,
    n_theta: int = 30,
    curves: WilliamsCurves | None = None,
) -> tuple[SweepResult, SweepResult]:
    """Mean and excursion (max - min) of h_bar across each arrangement's stage.

    Per arrangement, ``n_theta`` plane-wave angles are taken uniformly
    within its coverage angle; per lateral displacement the statistics run
    over those angles.
    """
    started = time.monotonic()
    x_values = DEFAULT_X_GRID_M if x_values is None else np.asarray(x_values, float)
    if curves is None:
        curves = WilliamsCurves.default()

    mean = np.zeros((len(arrangements), x_values.size))
    excursion = np.zeros_like(mean)
    names = []
    for a, arr in enumerate(arrangements):
        names.append(arr.name)
        coverage = coverage_angle(arr, curves, config.setup.speed_of_sound)
        if coverage <= 0.0:
            raise ValueError(f"arrangement {arr.name!r} has zero coverage")
        theta_set = np.linspace(-coverage / 2.0, coverage / 2.0, n_theta)
        points = [
            arrangement_curve(arr, float(t), config.setup.speed_of_sound)
            for t in theta_set
        ]
        cells = [
            (p.ictd, p.icld, float(x), 0.0) for x in x_values for p in points
        ]
        values = np.array(_evaluate_cells(config, cells)).reshape(
            x_values.size, n_theta
        )
        mean[a] = values.mean(axis=1)
        excursion[a] = values.max(axis=1) - values.min(axis=1)

    meta = _base_metadata(config, started)
    meta["arrangements"] = names
    meta["n_theta"] = n_theta
    axes = {"arrangement": np.array(names), "x_cm": x_values * 100.0}
    return (
        SweepResult(axes=axes, values=mean, metadata={**meta, "statistic": "mean"}),
        SweepResult(
            axes={"arrangement": np.array(names), "x_cm": x_values * 100.0},
            values=excursion,
            metadata={**meta, "statistic": "excursion"},
        ),
    )


def pearson(xs, ys) -> float:
    """Sample Pearson correlation coefficient."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size != ys.size or xs.size < 3:
        raise ValueError("need equal-length inputs with at least 3 samples")
    if np.ptp(xs) == 0.0 or np.ptp(ys) == 0.0:
        raise ValueError("inputs must have nonzero variance")
    return float(np.corrcoef(xs, ys)[0, 1])


def write_result_csv(result: SweepResult, path) -> None:
    """Axis columns plus h_bar, one row per cell, LF endings, '.' decimals."""
    names = list(result.axes.keys())
    grids = np.meshgrid(*[np.arange(len(v)) for v in result.axes.values()], indexing="ij")
    lines = [",".join(names + ["h_bar"])]
    flat_idx = [g.ravel() for g in grids]
    flat_values = result.values.ravel()
    axis_arrays = list(result.axes.values())
    for row in range(flat_values.size):
        fields = [
            _csv_field(axis_arrays[a][flat_idx[a][row]]) for a in range(len(names))
        ]
        fields.append(repr(float(flat_values[row])))
        lines.append(",".join(fields))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def _csv_field(value) -> str:
    if isinstance(value, (str, np.str_)):
        return str(value)
    return repr(float(value))


def write_result_json(result: SweepResult, path) -> None:
    doc = {
        "axes": {
            name: np.asarray(values).tolist() for name, values in result.axes.items()
        },
        "values": result.values.tolist(),
        "metadata": result.metadata,
    }
    _atomic_write_text(path, json.dumps(doc, sort_keys=True, separators=(",", ":")))


def _atomic_write_text(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
