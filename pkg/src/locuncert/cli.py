"""Command-line surface.

Subcommands::

    locuncert build-dict  [options]              build + save a cue dictionary
    locuncert analyze     --dict D [options]     score one panning point / pose
    locuncert sweep KIND  --dict D [options]     grid | spatial | psr-surface |
                                                 psr-avg | compare
    locuncert design KIND [options]              psr | arrangement
    locuncert geometry KIND [options]            tau-overlap | relative | coverage

Angles are degrees and times are milliseconds on the command line; all
internal computation is radians/seconds.  Options may come from a JSON
config file (--config); explicit flags win over the file.  Exit codes:
0 success, 1 usage/validation, 2 missing resource, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import geometry as geo
from . import model, panning, sweeps
from .auditory import FilterbankSpec
from .hrir import HrirFormatError, load_hrir_set, spherical_head_hrirs
from .stimuli import Stimulus

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MISSING = 2
EXIT_NUMERICAL = 3


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        raise UsageError(message)


_CONFIG_KEYS = {
    "setup": {"base_angle_deg", "speaker_distance_m", "speed_of_sound"},
    "stimulus": {"kind", "duration_ms", "taper_fraction", "seed", "sample_rate"},
    "listener": {"head_radius_m", "ear_angle_deg"},
    "hrir": {"source"},
    "p": None,
    "calibration_spl_db": None,
    "workers": None,
    "output_dir": None,
    "dictionary": None,
    "cache_dir": None,
}


def _load_config(path) -> dict:
    if not os.path.exists(path):
        raise FileNotFoundError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object")
    for key, value in doc.items():
        if key not in _CONFIG_KEYS:
            raise UsageError(f"unknown config key {key!r}")
        group = _CONFIG_KEYS[key]
        if group is not None:
            if not isinstance(value, dict):
                raise UsageError(f"config key {key!r} must be an object")
            unknown = set(value) - group
            if unknown:
                raise UsageError(f"unknown config key {key}.{unknown.pop()}")
    return doc


def _cfg(config: dict, group: str, key: str, flag_value, default):
    if flag_value is not None:
        return flag_value
    return config.get(group, {}).get(key, default)


def _scalar(config: dict, key: str, flag_value, default):
    if flag_value is not None:
        return flag_value
    return config.get(key, default)


def _setup_from(config: dict, args) -> geo.StereoSetup:
    return geo.StereoSetup(
        base_angle=math.radians(
            _cfg(config, "setup", "base_angle_deg", args.base_angle_deg, 60.0)
        ),
        speaker_distance=_cfg(
            config, "setup", "speaker_distance_m", args.speaker_distance_m, 2.0
        ),
        speed_of_sound=_cfg(config, "setup", "speed_of_sound", None, geo.SPEED_OF_SOUND),
    )


def _stimulus_from(config: dict, args) -> Stimulus:
    return Stimulus(
        kind=_cfg(config, "stimulus", "kind", getattr(args, "stimulus_kind", None), "white-noise"),
        duration=_cfg(config, "stimulus", "duration_ms", getattr(args, "duration_ms", None), 50.0)
        / 1e3,
        taper_fraction=_cfg(config, "stimulus", "taper_fraction", None, 0.05),
        seed=int(_cfg(config, "stimulus", "seed", getattr(args, "seed", None), 0)),
        sample_rate=int(_cfg(config, "stimulus", "sample_rate", None, 44100)),
    )


def _pose_from(config: dict, args) -> geo.ListenerPose:
    return geo.ListenerPose(
        x=getattr(args, "x_m", None) or 0.0,
        y=getattr(args, "y_m", None) or 0.0,
        head_radius=_cfg(config, "listener", "head_radius_m", None, 0.09),
        ear_angle=math.radians(_cfg(config, "listener", "ear_angle_deg", None, 100.0)),
    )


def _hrirs_from(config: dict, args, sample_rate: int):
    source = _cfg(config, "hrir", "source", getattr(args, "hrir", None), "analytic")
    if source == "analytic":
        return spherical_head_hrirs(sample_rate=sample_rate)
    if not os.path.exists(source):
        raise FileNotFoundError(f"HRIR file not found: {source}")
    return load_hrir_set(source)


def _load_dictionary(config: dict, args):
    path = _scalar(config, "dictionary", getattr(args, "dict", None), None)
    if path is None:
        raise UsageError("a dictionary path is required (--dict or config)")
    if not os.path.exists(path):
        raise FileNotFoundError(f"dictionary file not found: {path}")
    return model.load_dictionary(path)


def _output_dir(config: dict, args) -> str:
    out = _scalar(config, "output_dir", getattr(args, "out_dir", None), ".")
    os.makedirs(out, exist_ok=True)
    return out


def build_parser() -> _Parser:
    parser = _Parser(prog="locuncert", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON config file")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--base-angle-deg", type=float, dest="base_angle_deg")
        p.add_argument("--speaker-distance-m", type=float, dest="speaker_distance_m")

    p = sub.add_parser("build-dict", help="build and save a free-field cue dictionary")
    common(p)
    p.add_argument("--out", default="dictionary.json")
    p.add_argument("--hrir", help="'analytic' or path to an HRIR JSON file")
    p.add_argument("--seed", type=int)
    p.add_argument("--duration-ms", type=float, dest="duration_ms")
    p.add_argument("--stimulus-kind", dest="stimulus_kind")
    p.add_argument("--p", type=float)
    p.add_argument("--repetitions", type=int, default=10)

    p = sub.add_parser("analyze", help="score one panning point at one pose")
    common(p)
    p.add_argument("--dict", required=False)
    p.add_argument("--hrir")
    p.add_argument("--ictd-ms", type=float, default=0.0)
    p.add_argument("--icld-db", type=float, default=0.0)
    p.add_argument("--x-m", type=float, dest="x_m", default=0.0)
    p.add_argument("--y-m", type=float, dest="y_m", default=0.0)
    p.add_argument("--p", type=float)
    p.add_argument("--out-dir", dest="out_dir")

    p = sub.add_parser("sweep", help="regenerate experiment data")
    p.add_argument("kind", choices=["grid", "spatial", "psr-surface", "psr-avg", "compare"])
    common(p)
    p.add_argument("--dict")
    p.add_argument("--hrir")
    p.add_argument("--x-m", type=float, dest="x_m", default=0.0)
    p.add_argument("--y-m", type=float, dest="y_m", default=0.0)
    p.add_argument("--x-range-cm", nargs=3, type=float, metavar=("LO", "HI", "STEP"))
    p.add_argument("--ictd-range-ms", nargs=3, type=float, metavar=("LO", "HI", "STEP"))
    p.add_argument("--icld-range-db", nargs=3, type=float, metavar=("LO", "HI", "STEP"))
    p.add_argument("--workers", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--duration-ms", type=float, dest="duration_ms")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--psr-d-cm", type=float, default=0.0, help="PSR distance for spatial maps")

    p = sub.add_parser("design", help="print/export a panning or mic design")
    p.add_argument("kind", choices=["psr", "arrangement"])
    common(p)
    p.add_argument("--d-cm", type=float, default=0.0)
    p.add_argument("--arrangement", choices=sorted(panning.TABLE_ARRANGEMENTS), default="ortf")
    p.add_argument("--williams", help="JSON file of left-curve control points")
    p.add_argument("--out-dir", dest="out_dir")

    p = sub.add_parser("geometry", help="closed-form geometry quantities")
    p.add_argument("kind", choices=["tau-overlap", "relative", "coverage"])
    common(p)
    p.add_argument("--head-radius-m", type=float, default=0.09)
    p.add_argument("--ear-angle-deg", type=float, default=100.0)
    p.add_argument("--ictd-ms", type=float, default=0.0)
    p.add_argument("--icld-db", type=float, default=0.0)
    p.add_argument("--x-m", type=float, dest="x_m", default=0.0)
    p.add_argument("--y-m", type=float, dest="y_m", default=0.0)
    p.add_argument("--arrangement", choices=sorted(panning.TABLE_ARRANGEMENTS), default="ortf")
    return parser


def _cmd_build_dict(args, config) -> int:
    stimulus = _stimulus_from(config, args)
    hrirs = _hrirs_from(config, args, stimulus.sample_rate)
    p = _scalar(config, "p", args.p, model.DEFAULT_P)
    dictionary = model.build_dictionary(
        hrirs,
        stimulus,
        repetitions=args.repetitions,
        p=p,
        filterbank=FilterbankSpec(sample_rate=stimulus.sample_rate),
    )
    model.save_dictionary(dictionary, args.out)
    print(f"dictionary written to {args.out}")
    print(f"h_min = {dictionary.h_min:.4f} (p = {dictionary.p})")
    print(f"hrir: {dictionary.provenance['hrir']}")
    print(f"stimulus: {dictionary.provenance['stimulus']}")
    print(f"seeds: {dictionary.provenance['seeds']}")
    return EXIT_OK


def _cmd_analyze(args, config) -> int:
    setup = _setup_from(config, args)
    pose = _pose_from(config, args)
    point = geo.PanningPoint(ictd=args.ictd_ms / 1e3, icld=args.icld_db)

    for method in (geo.PRINTED_APPROXIMATION, geo.EXACT_PATH):
        rel = geo.relative_panning(point, pose, setup, method)
        print(
            f"RICTD/RICLD ({method}): {rel.rictd*1e3:.4f} ms, {rel.ricld:.4f} dB"
        )

    dictionary = _load_dictionary(config, args)
    stimulus = _stimulus_from(config, args)
    hrirs = _hrirs_from(config, args, stimulus.sample_rate)
    p = _scalar(config, "p", args.p, dictionary.p)
    cfg = sweeps.SweepConfig(
        setup=setup,
        stimulus=stimulus,
        dictionary=dictionary,
        hrirs=hrirs,
        p=p,
        calibration_spl=_scalar(config, "calibration_spl_db", None, 70.0),
        head_radius=pose.head_radius,
        ear_angle=pose.ear_angle,
    )
    from .render import render, stereo_pair_sources
    from .stimuli import generate

    signal = generate(stimulus)
    ears = render(
        stereo_pair_sources(point, setup, pose, signal),
        hrirs,
        speed_of_sound=setup.speed_of_sound,
        sample_rate=stimulus.sample_rate,
    )
    result = model.localization_uncertainty(
        ears, dictionary, p=p, calibration_spl=cfg.calibration_spl
    )
    print(f"h_bar = {result.h_bar:.4f}")

    out_dir = _output_dir(config, args)
    path = os.path.join(out_dir, f"likelihood-{sweeps.config_hash(cfg)}.csv")
    lines = ["theta_deg,likelihood"]
    for theta, value in zip(result.likelihood.theta_grid, result.likelihood.values):
        lines.append(f"{math.degrees(theta)!r},{float(value)!r}")
    sweeps._atomic_write_text(path, "\n".join(lines) + "\n")
    print(f"likelihood written to {path}")
    return EXIT_OK


def _cmd_sweep(args, config) -> int:
    setup = _setup_from(config, args)
    dictionary = _load_dictionary(config, args)
    stimulus = _stimulus_from(config, args)
    hrirs = _hrirs_from(config, args, stimulus.sample_rate)
    cfg = sweeps.SweepConfig(
        setup=setup,
        stimulus=stimulus,
        dictionary=dictionary,
        hrirs=hrirs,
        p=_scalar(config, "p", args.p, dictionary.p),
        calibration_spl=_scalar(config, "calibration_spl_db", None, 70.0),
        workers=int(_scalar(config, "workers", args.workers, 1)),
        cache_dir=_scalar(config, "cache_dir", None, None),
    )
    out_dir = _output_dir(config, args)
    tag = sweeps.config_hash(cfg)
    pose = cfg.pose(args.x_m, args.y_m)

    def emit(result, name):
        csv_path = os.path.join(out_dir, f"{name}-{tag}.csv")
        json_path = os.path.join(out_dir, f"{name}-{tag}.json")
        sweeps.write_result_csv(result, csv_path)
        sweeps.write_result_json(result, json_path)
        flat = result.values.ravel()
        argmin = int(np.argmin(flat))
        print(
            f"{name}: min={flat.min():.4f} max={flat.max():.4f} "
            f"argmin(flat)={argmin} -> {csv_path}"
        )
        return csv_path

    if args.kind == "grid":
        ictd = (
            np.arange(args.ictd_range_ms[0], args.ictd_range_ms[1] + 1e-9, args.ictd_range_ms[2]) / 1e3
            if args.ictd_range_ms
            else None
        )
        icld = (
            np.arange(args.icld_range_db[0], args.icld_range_db[1] + 1e-9, args.icld_range_db[2])
            if args.icld_range_db
            else None
        )
        emit(sweeps.grid_ictd_icld(cfg, pose, ictd, icld), "grid")
    elif args.kind == "spatial":
        design = panning.psr_design(
            args.psr_d_cm / 100.0, setup.base_angle, speed_of_sound=setup.speed_of_sound
        )
        theta_set = np.linspace(-setup.base_angle / 2, setup.base_angle / 2, 7)
        points = [panning.psr_curve(design, float(t)) for t in theta_set]
        x_values = _range_from(args.x_range_cm, (-0.2, 0.2, 0.05))
        emit(sweeps.spatial_map(cfg, x_values, np.array([0.0]), points), "spatial")
    elif args.kind == "psr-surface":
        theta_set = np.radians(np.arange(-30.0, 30.0 + 1e-9, 2.5))
        emit(
            sweeps.psr_surface(cfg, sweeps.DEFAULT_D_GRID_M, theta_set, pose),
            "psr-surface",
        )
    elif args.kind == "psr-avg":
        x_values = _range_from(args.x_range_cm, (0.0, 0.0, 1.0))
        result = sweeps.psr_average_vs_d(cfg, x_values=x_values)
        emit(result, "psr-avg")
        d_cm = result.axes["d_cm"]
        print(f"argmin d = {d_cm[int(np.argmin(result.values))]:.2f} cm")
    elif args.kind == "compare":
        designs = [
            panning.psr_arrangement(
                panning.psr_design(d, setup.base_angle, speed_of_sound=setup.speed_of_sound)
            )
            for d in (0.0, 0.187, 0.372)
        ]
        arrangements = designs + [
            panning.TABLE_ARRANGEMENTS[k] for k in ("blumlein", "xy90", "ortf", "din", "nos")
        ]
        x_values = _range_from(args.x_range_cm, (-0.2, 0.2, 0.01))
        mean, excursion = sweeps.arrangement_comparison(cfg, arrangements, x_values)
        emit(mean, "compare-mean")
        emit(excursion, "compare-excursion")
    return EXIT_OK


def _range_from(triple, default) -> np.ndarray:
    lo, hi, step = triple if triple is not None else [v * 100 for v in default]
    return np.arange(lo, hi + 1e-9, step) / 100.0


def _cmd_design(args, config) -> int:
    curves = (
        panning.WilliamsCurves.from_json(args.williams)
        if args.williams
        else panning.WilliamsCurves.default()
    )
    setup = _setup_from(config, args)
    out_dir = _output_dir(config, args)
    if args.kind == "psr":
        design = panning.psr_design(
            args.d_cm / 100.0, setup.base_angle, curves, setup.speed_of_sound
        )
        print(
            f"PSR design: d = {design.d*100:.3f} cm, "
            f"ictd_max = {design.ictd_max*1e3:.4f} ms, "
            f"icld_w = {design.icld_w:.4f} dB, "
            f"beta = {math.degrees(design.beta):.4f} deg"
        )
        thetas = np.linspace(-setup.base_angle / 2, setup.base_angle / 2, 61)
        rows = ["theta_s_deg,ictd_ms,icld_db"]
        for theta in thetas:
            pp = panning.psr_curve(design, float(theta))
            rows.append(f"{math.degrees(theta)!r},{pp.ictd*1e3!r},{pp.icld!r}")
        path = os.path.join(out_dir, f"psr-curve-d{args.d_cm:g}cm.csv")
        sweeps._atomic_write_text(path, "\n".join(rows) + "\n")
        print(f"curve written to {path}")
    else:
        arr = panning.TABLE_ARRANGEMENTS[args.arrangement]
        coverage = panning.coverage_angle(arr, curves, setup.speed_of_sound)
        print(f"{arr.name}: coverage angle = {math.degrees(coverage):.1f} deg")
        half = coverage / 2.0
        thetas = np.linspace(-half, half, 61) if coverage > 0 else np.array([0.0])
        rows = ["theta_s_deg,ictd_ms,icld_db"]
        for theta in thetas:
            pp = panning.arrangement_curve(arr, float(theta), setup.speed_of_sound)
            rows.append(f"{math.degrees(theta)!r},{pp.ictd*1e3!r},{pp.icld!r}")
        path = os.path.join(out_dir, f"arrangement-{args.arrangement}.csv")
        sweeps._atomic_write_text(path, "\n".join(rows) + "\n")
        print(f"curve written to {path}")
    return EXIT_OK


def _cmd_geometry(args, config) -> int:
    setup = _setup_from(config, args)
    if args.kind == "tau-overlap":
        tau = geo.tau_overlap(
            args.head_radius_m,
            math.radians(args.ear_angle_deg),
            setup.base_angle,
            setup.speed_of_sound,
        )
        d = geo.psr_distance_for_tau_overlap(
            args.head_radius_m, math.radians(args.ear_angle_deg), setup.base_angle
        )
        print(f"tau_o = {tau*1e3:.4f} ms")
        print(f"matching inter-mic distance d = {d*100:.2f} cm")
    elif args.kind == "relative":
        pose = geo.ListenerPose(
            x=args.x_m,
            y=args.y_m,
            head_radius=args.head_radius_m,
            ear_angle=math.radians(args.ear_angle_deg),
        )
        point = geo.PanningPoint(ictd=args.ictd_ms / 1e3, icld=args.icld_db)
        for method in (geo.PRINTED_APPROXIMATION, geo.EXACT_PATH):
            rel = geo.relative_panning(point, pose, setup, method)
            print(f"{method}: RICTD = {rel.rictd*1e3:.4f} ms, RICLD = {rel.ricld:.4f} dB")
    else:
        arr = panning.TABLE_ARRANGEMENTS[args.arrangement]
        coverage = panning.coverage_angle(arr, speed_of_sound=setup.speed_of_sound)
        print(f"{arr.name}: coverage angle = {math.degrees(coverage):.1f} deg")
    return EXIT_OK


_COMMANDS = {
    "build-dict": _cmd_build_dict,
    "analyze": _cmd_analyze,
    "sweep": _cmd_sweep,
    "design": _cmd_design,
    "geometry": _cmd_geometry,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _load_config(args.config) if args.config else {}
        return _COMMANDS[args.command](args, config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, HrirFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
