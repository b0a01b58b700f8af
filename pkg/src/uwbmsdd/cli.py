"""Command-line front door.

Subcommands: ber (BER/complexity sweep), tradeoff (required Eb/N0 vs average
search complexity over clipping levels), overall (complexity-budgeted
trajectory vs a differential-detection reference), selftest (compact
detector verification against the exhaustive oracle).

Configuration precedence, lowest to highest: built-in defaults, --config
file (INI sections, see below), --override section.key=value (repeatable;
bare key goes to [experiment]), then dedicated flags (--seed, --detector,
--L, --llr-max, --stopping, --nu, --front-end). Unknown keys are rejected.
Output directory: --out, else $UWBMSDD_OUT, else ./results.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .core import AcrMatrix, DetectorConfig
from .detect import hosd, msdd_exhaustive, sosd
from .sim import (
    ExperimentConfig,
    run_ber_sweep,
    run_overall_complexity,
    run_tradeoff,
    write_manifest,
    write_rows_csv,
)
from .waveform import PulseSpec, SalehValenzuelaParams

ENV_OUT = "UWBMSDD_OUT"


class ConfigError(Exception):
    pass


def _parse_bool(v):
    s = str(v).strip().lower()
    if s in ("1", "true", "on", "yes"):
        return True
    if s in ("0", "false", "off", "no"):
        return False
    raise ConfigError(f"expected a boolean, got {v!r}")


def _parse_grid(v):
    """Float list: either 'a,b,c' or 'start:stop:step' (stop inclusive)."""
    s = str(v).strip()
    if ":" in s:
        parts = s.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid {v!r} must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + k * step, 10) for k in range(n))
    return tuple(float(p) for p in s.split(","))


def _parse_int_list(v):
    return tuple(int(p) for p in str(v).split(","))


def _parse_float_list(v):
    return tuple(float(p) for p in str(v).split(","))


def _parse_candidates(v):
    """Candidate list 'nu:llr_max,nu:llr_max,...' for the overall study."""
    out = []
    for tok in str(v).split(","):
        nu, lm = tok.split(":")
        out.append((int(nu), float(lm)))
    return tuple(out)


_EXPERIMENT_KEYS = {
    "ebn0_grid_db": _parse_grid,
    "L_list": _parse_int_list,
    "L": int,  # shorthand for a single-entry L_list
    "detector": str,
    "llr_max": float,
    "stopping": _parse_bool,
    "code_nu": int,
    "interleaver_bits": int,
    "symbol_duration_ns": float,
    "integration_time_ns": float,
    "min_bit_errors": int,
    "max_bits": int,
    "seed": int,
    "front_end": str,
    "stop_below_ber": float,
}

_CHANNEL_KEYS = {
    "cluster_rate_per_ns": float,
    "ray_rate_per_ns": float,
    "cluster_decay_ns": float,
    "ray_decay_ns": float,
    "max_delay_ns": float,
}

_PULSE_KEYS = {
    "center_frequency_ghz": float,
    "bandwidth_10db_ghz": float,
    "sample_rate_ghz": float,
}

_TRADEOFF_KEYS = {"target_ber": float, "llr_max_grid": _parse_float_list}
_OVERALL_KEYS = {"target_ber": float, "nu_ref": int, "candidates": _parse_candidates}

_SCHEMA = {
    "experiment": _EXPERIMENT_KEYS,
    "channel": _CHANNEL_KEYS,
    "pulse": _PULSE_KEYS,
    "tradeoff": _TRADEOFF_KEYS,
    "overall": _OVERALL_KEYS,
}


def _read_config(path) -> dict:
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keys are case-sensitive (L_list)
    if not cp.read(path):
        raise ConfigError(f"config file {path} not found or unreadable")
    values: dict = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in cp[section].items():
            _apply_value(values, section, key, raw)
    return values


def _apply_value(values: dict, section: str, key: str, raw):
    schema = _SCHEMA.get(section)
    if schema is None:
        raise ConfigError(f"unknown config section [{section}]")
    if key not in schema:
        raise ConfigError(f"unknown key {section}.{key}")
    try:
        values[(section, key)] = schema[key](raw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {section}.{key}: {exc}") from exc


def _build_config(values: dict) -> ExperimentConfig:
    chan_kwargs = {k: v for (sec, k), v in values.items() if sec == "channel"}
    pulse_kwargs = {}
    for (sec, k), v in values.items():
        if sec == "pulse":
            pulse_kwargs[k.replace("_ghz", "")] = v * 1e9
    exp_kwargs = {}
    for (sec, k), v in values.items():
        if sec != "experiment":
            continue
        if k == "symbol_duration_ns":
            exp_kwargs["symbol_duration"] = v * 1e-9
        elif k == "integration_time_ns":
            exp_kwargs["integration_time"] = v * 1e-9
        elif k == "L":
            exp_kwargs["L_list"] = (v,)
        else:
            exp_kwargs[k] = v
    try:
        return ExperimentConfig(
            channel=SalehValenzuelaParams(**chan_kwargs),
            pulse=PulseSpec(**pulse_kwargs),
            **exp_kwargs,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _apply_flag_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.detector is not None:
        updates["detector"] = args.detector
    if args.L is not None:
        updates["L_list"] = (args.L,)
    if args.llr_max is not None:
        updates["llr_max"] = args.llr_max
    if args.stopping is not None:
        updates["stopping"] = args.stopping == "on"
    if args.nu is not None:
        updates["code_nu"] = args.nu
    if args.front_end is not None:
        updates["front_end"] = "semi_analytic" if args.front_end == "semi" else args.front_end
    try:
        return replace(cfg, **updates) if updates else cfg
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def emit_plot_data(rows, outdir: Path, kind: str):
    """Write figure-ready data files derived from result rows.

    ber      -> ber_curves.csv            (ebn0_db, ber, detector, L)
    tradeoff -> tradeoff_points.csv       (required_ebn0_db, avg_c_sd,
                llr_max, L, stopping), ordered by L then llr_max descending
    overall  -> trajectory_ebn0.csv       (L, required_ebn0_db, nu, llr_max)
                trajectory_complexity.csv (L, c_o_soft, c_o_max, feasible)
    """
    if not rows:
        raise ValueError("no result rows to emit")
    written = []

    def _write(name, header, rowiter):
        path = outdir / name
        with open(path, "w", encoding="ascii") as fh:
            fh.write(",".join(header) + "\n")
            for vals in rowiter:
                fh.write(",".join(str(v) for v in vals) + "\n")
        written.append(path)

    if kind == "ber":
        _write(
            "ber_curves.csv",
            ("ebn0_db", "ber", "detector", "L"),
            ((r.ebn0_db, repr(r.ber), r.detector, r.L) for r in rows),
        )
    elif kind == "tradeoff":
        ordered = sorted(rows, key=lambda r: (r.L, -r.llr_max))
        _write(
            "tradeoff_points.csv",
            ("required_ebn0_db", "avg_c_sd", "llr_max", "L", "stopping"),
            (
                (repr(r.ebn0_db), repr(r.avg_c_sd), r.llr_max, r.L, int(r.stopping))
                for r in ordered
            ),
        )
    elif kind == "overall":
        ordered = sorted(rows, key=lambda r: r.L)
        _write(
            "trajectory_ebn0.csv",
            ("L", "required_ebn0_db", "nu", "llr_max"),
            ((r.L, repr(r.ebn0_db), r.code_nu, r.llr_max) for r in ordered),
        )
        _write(
            "trajectory_complexity.csv",
            ("L", "c_o_soft", "c_o_max", "feasible"),
            ((r.L, repr(r.c_o_soft), repr(r.c_o_max), int(r.feasible)) for r in ordered),
        )
    else:
        raise ValueError(f"unknown plot kind {kind!r}")
    return written


def run_selftest(seed: int = 0) -> int:
    """Compact detector verification; prints one line per check."""
    rng = np.random.default_rng(seed)
    failures = 0

    def check(name, ok):
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failures += 0 if ok else 1

    for L in (1, 2, 3, 5, 8):
        ok_llr = ok_hard = ok_clip = ok_stop = True
        for _ in range(200):
            zu = np.triu(rng.normal(size=(L + 1, L + 1)), k=1)
            z = AcrMatrix(zu, 1.0)
            ref = msdd_exhaustive(z)
            soft = sosd(z, DetectorConfig(L=L))
            ok_llr &= bool(np.allclose(soft.llr, ref.llr, atol=1e-9, rtol=0))
            hard = hosd(z, DetectorConfig(L=L))
            ok_hard &= abs(hard.lambda_best - ref.lambda_best) <= 1e-12
            clip = sosd(z, DetectorConfig(L=L, llr_max=0.25))
            ok_clip &= bool(np.max(np.abs(clip.llr)) <= 0.25 + 1e-12)
            stop = hosd(z, DetectorConfig(L=L, use_stopping_criterion=True))
            ok_stop &= abs(stop.lambda_best - ref.lambda_best) <= 1e-12
        check(f"L={L} soft output equals exhaustive oracle (200 blocks)", ok_llr)
        check(f"L={L} hard sphere metric equals exhaustive minimum", ok_hard)
        check(f"L={L} clipping bound respected", ok_clip)
        check(f"L={L} early stopping keeps the optimal metric", ok_stop)

    print(f"selftest: {'all checks passed' if failures == 0 else f'{failures} checks FAILED'}")
    return 0 if failures == 0 else 1


def _build_parser():
    p = argparse.ArgumentParser(
        prog="uwbmsdd",
        description="Sphere-decoded soft-output block detection for IR-UWB: "
        "coded-link Monte-Carlo experiments.",
    )
    p.add_argument("--version", action="version", version=f"uwbmsdd {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("ber", "BER vs Eb/N0 sweep"),
        ("tradeoff", "required Eb/N0 vs average search complexity"),
        ("overall", "complexity-budgeted trajectory vs the DD reference"),
        ("selftest", "verify the detectors against the exhaustive oracle"),
    ):
        q = sub.add_parser(name, help=help_)
        q.add_argument("--config", default=None, help="INI config file")
        q.add_argument("--out", default=None, help="output directory")
        q.add_argument("--seed", type=int, default=None)
        q.add_argument(
            "--override",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="config override, section.key=value (bare key means experiment.key)",
        )
        q.add_argument("--front-end", choices=("waveform", "semi", "semi_analytic"), default=None)
        q.add_argument("--detector", choices=("dd_hard", "dd_soft", "hosd", "sosd", "msdd_exhaustive"), default=None)
        q.add_argument("--L", type=int, default=None)
        q.add_argument("--llr-max", dest="llr_max", type=float, default=None)
        q.add_argument("--stopping", choices=("on", "off"), default=None)
        q.add_argument("--nu", type=int, default=None)
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        values = _read_config(args.config) if args.config else {}
        for item in args.override:
            if "=" not in item:
                raise ConfigError(f"override {item!r} must be key=value")
            key, raw = item.split("=", 1)
            section, _, name = key.partition(".")
            if not name:
                section, name = "experiment", key
            _apply_value(values, section, name, raw)
        cfg = _apply_flag_overrides(_build_config(values), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "selftest":
        return run_selftest(cfg.seed)

    outdir = Path(args.out or os.environ.get(ENV_OUT) or "results")
    outdir.mkdir(parents=True, exist_ok=True)

    def get(sec, key, default):
        return values.get((sec, key), default)

    try:
        if args.command == "ber":
            rows = run_ber_sweep(cfg)
            extra = {}
        elif args.command == "tradeoff":
            rows = run_tradeoff(
                cfg,
                llr_max_grid=get("tradeoff", "llr_max_grid", (10.0, 2.0, 1.0, 0.5, 0.25, 0.1, 0.05)),
                target_ber=get("tradeoff", "target_ber", 1e-3),
            )
            extra = {"target_ber": get("tradeoff", "target_ber", 1e-3)}
        else:
            rows = run_overall_complexity(
                cfg,
                candidates=get("overall", "candidates", ((6, 10.0), (6, 1.0), (6, 0.25), (5, 1.0), (4, 0.0))),
                nu_ref=get("overall", "nu_ref", 7),
                target_ber=get("overall", "target_ber", 1e-3),
            )
            extra = {
                "nu_ref": get("overall", "nu_ref", 7),
                "target_ber": get("overall", "target_ber", 1e-3),
            }
        csv_path = outdir / f"{args.command}_results.csv"
        write_rows_csv(rows, csv_path)
        write_manifest(cfg, args.command, outdir / f"{args.command}_manifest.json", extra=extra)
        files = emit_plot_data(rows, outdir, args.command)
        for f in [csv_path] + files:
            print(f"wrote {f}")
        return 0
    except Exception as exc:  # runtime failure contract: exit 1 with message
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
