"""Command-line entry point.

Exit codes: 0 success, 1 validation error, 2 sweep infeasible at every point.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from .atmosphere import (
    WEATHER_PRESETS,
    PathGeometry,
    blackbody_spectral_radiance,
    rayleigh_range_km,
    total_budget,
    wien_peak_um,
)
from .mcsim import McConfig, compare_to_analytic
from .receiver import PRESETS
from .scenario import (
    ScenarioError,
    ScenarioFile,
    cutoff_distance,
    emit,
    load_scenario,
    run_sweep,
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INFEASIBLE = 2


def _resolve(args) -> ScenarioFile:
    sc = load_scenario(args.scenario) if args.scenario else ScenarioFile()
    if args.trace:
        sc = sc.with_trace(args.trace)
    if args.preset:
        sc = sc.with_weather(args.preset)
    if getattr(args, "seed", None) is not None:
        sc = replace(sc, seed=args.seed)
    return sc


def cmd_budget(args) -> int:
    sc = _resolve(args)
    geom = PathGeometry(args.distance, sc.telescope_radius_m)
    budget = total_budget(sc.carrier, geom, sc.weather, sc.absorption)
    out = {
        "trace": sc.trace,
        "weather": sc.weather_name,
        "distance_km": args.distance,
        "rayleigh_range_km": rayleigh_range_km(geom, sc.carrier),
        **budget.as_dict(),
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_sweep(args) -> int:
    sc = _resolve(args)
    rows = run_sweep(sc, workers=args.workers)
    fmt = args.format or sc.output_format
    path = args.out or sc.output_path
    meta = sc.metadata()
    meta["cutoff_km"] = cutoff_distance(rows)
    text = emit(rows, fmt, path, meta)
    if path is None:
        sys.stdout.write(text)
    if not any(r.feasible for r in rows):
        print("no feasible distance in sweep", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_mc(args) -> int:
    sc = _resolve(args)
    cfg = McConfig(
        seed=sc.seed,
        n_pulses=args.n_pulses,
        source=sc.source,
        receiver=sc.receiver,
        channel_transmittance=args.tau,
    )
    report = compare_to_analytic(cfg, workers=args.workers)
    res = report.result
    out = {
        "seed": cfg.seed,
        "n_pulses": cfg.n_pulses,
        "channel_transmittance": cfg.channel_transmittance,
        "cells": [
            {
                "basis": b,
                "intensity": k,
                "detections": res.counts.n[b, k],
                "errors": res.counts.m[b, k],
                "live_trials": res.live_trials[b, k],
                "gain": res.observables.gain[b, k],
                "qber": res.observables.qber[b, k],
                "z_gain": report.gain_z[b, k],
                "z_qber": report.qber_z[b, k],
            }
            for b, k in report.gain_z
        ],
        "dead_time_throughput": res.throughput,
        "z_dead_time": report.throughput_z,
        "flags": report.flags,
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_blackbody(args) -> int:
    wavelengths = np.geomspace(args.wl_min, args.wl_max, args.points)
    temps = args.temperature
    print("wavelength_um," + ",".join(f"radiance_{t:g}K" for t in temps))
    for wl in wavelengths:
        vals = [blackbody_spectral_radiance(t, float(wl)) for t in temps]
        print(f"{wl!r}," + ",".join(repr(v) for v in vals))
    for t in temps:
        print(f"# wien_peak_um[{t:g}K] = {wien_peak_um(t)!r}")
    return EXIT_OK


def cmd_presets(args) -> int:
    print("hardware traces:")
    for name, p in PRESETS.items():
        det = p.receiver.detector
        print(
            f"  {name:<14} {p.carrier.wavelength_nm:>8g} nm  eta={det.efficiency:g}  "
            f"dark={det.dark_count_rate_hz:g} Hz  dead={det.dead_time_s:g} s"
        )
    print("weather presets:")
    for name, w in WEATHER_PRESETS.items():
        print(
            f"  {name:<11} V={w.visibility_km:g} km  R={w.rain_rate_mm_per_h:g} mm/h  "
            f"turbulence={'on' if w.turbulence_enabled else 'off'}  cn2={w.cn2:g}"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario file (INI)")
    common.add_argument("--preset", help="weather preset, e.g. FOG_TURB")
    common.add_argument("--trace", help="hardware preset, e.g. MIR_UPCONV")
    common.add_argument("--seed", type=int, default=None)

    p = argparse.ArgumentParser(prog="fsqkd", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("budget", parents=[common], help="attenuation budget at one distance")
    s.add_argument("--distance", type=float, required=True, help="link length in km")
    s.set_defaults(func=cmd_budget)

    s = sub.add_parser("sweep", parents=[common], help="key rate versus distance")
    s.add_argument("--out", help="output path (stdout if omitted)")
    s.add_argument("--format", choices=("csv", "json"))
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("mc", parents=[common], help="Monte Carlo block vs analytic model")
    s.add_argument("--tau", type=float, default=0.1, help="channel transmittance")
    s.add_argument("--n-pulses", type=int, default=1_000_000)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_mc)

    s = sub.add_parser("blackbody", help="Planck radiance table")
    s.add_argument("--temperature", type=float, nargs="+", default=[5778.0, 288.0])
    s.add_argument("--wl-min", type=float, default=0.1, help="um")
    s.add_argument("--wl-max", type=float, default=50.0, help="um")
    s.add_argument("--points", type=int, default=200)
    s.set_defaults(func=cmd_blackbody)

    s = sub.add_parser("presets", help="list built-in presets")
    s.set_defaults(func=cmd_presets)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, KeyError, ValueError) as exc:
        msg = exc.args[0] if exc.args else str(exc)
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
