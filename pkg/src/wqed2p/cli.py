"""Command-line front end.

Usage::

    wqed2p <mode> --config <file or preset> [--set key=value]... --out <dir>

Modes:
    single        single-photon spectrum of the whole system
    t2            transmitted pair amplitude t2(x) per pair energy
    g2            same table, named for the correlation curve
    scan-g20      g2(0) along an energy scan plus a minima report
    oracle-check  independent cross-checks of the numerics

Every run writes ``manifest.json`` next to its data. Exit status is 0 on
success, 1 for an invalid configuration and 2 for a numerical failure.
The worker count for parallel points comes from ``WQED2P_WORKERS``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import MODES, PRESETS, ConfigError, RunConfig, load_config
from .core_model import TWO_PI
from .observables import DIVERGENCE_THRESHOLD, fourier_t2, g2, scan_g20
from .quadrature import QuadratureError
from .shell_operator_algebra import AlgebraError
from .single_photon import system_single
from .system_pipeline import run_pipeline

WORKERS_ENV = "WQED2P_WORKERS"

#: Column headers of every CSV the CLI writes.
HEADERS = {
    "single": ["k", "abs_t_sq", "abs_r_sq", "arg_t"],
    "t2": ["x", "re_t2", "im_t2", "abs_t2_sq", "g2"],
    "scan-g20": ["e_half", "g2_0", "log10_g2_0"],
}


class NumericalFailure(RuntimeError):
    """A computation did not converge or hit a singular operator."""


def fmt(value: float) -> str:
    """Scientific notation with 12 significant digits."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.11e}"


def write_csv(path: Path, header, rows) -> None:
    """Comma-separated table with a header row and LF line endings."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def write_json(path: Path, data) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def worker_count() -> int:
    """Workers from the environment (default 1).

    Raises:
        ConfigError: If the variable is not a positive integer.
    """
    raw = os.environ.get(WORKERS_ENV, "1").strip() or "1"
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return n


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# Modes
# ---------------------------------------------------------------------------

def run_single(cfg: RunConfig, out: Path, workers: int) -> dict:
    k = cfg.k_grid()
    amp = system_single(TWO_PI * k, cfg.params)
    rows = zip(k, np.abs(amp.t) ** 2, np.abs(amp.r) ** 2, np.angle(amp.t))
    write_csv(out / "single.csv", HEADERS["single"], rows)
    return {"files": ["single.csv"], "singular_points": int(np.count_nonzero(amp.singular))}


def correlation_curve(e_half: float, cfg: RunConfig):
    """t2 and g2 on the configured separation grid for one pair energy.

    Raises:
        NumericalFailure: On quadrature or algebra failure.
    """
    E = 2.0 * e_half * TWO_PI
    d0 = cfg.delta0 * TWO_PI
    try:
        fin, _ = run_pipeline(E, d0, cfg.params, cfg.rtol)
        return g2(fourier_t2(fin, cfg.x_grid(), cfg.params, cfg.rtol), fin)
    except (QuadratureError, AlgebraError, FloatingPointError) as exc:
        raise NumericalFailure(f"E/2 = {e_half}: {type(exc).__name__}: {exc}") from exc


def _curve_task(args):
    return correlation_curve(*args)


def curve_filename(mode: str, e_half: float) -> str:
    return f"{mode}_E{e_half:.6f}.csv"


def run_curves(cfg: RunConfig, out: Path, workers: int, mode: str) -> dict:
    tasks = [(float(e), cfg) for e in cfg.e_half]
    if workers > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            curves = list(pool.map(_curve_task, tasks))
    else:
        curves = [_curve_task(t) for t in tasks]
    files, summary = [], []
    for e_half, curve in zip(cfg.e_half, curves):
        name = curve_filename(mode, e_half)
        rows = zip(curve.x_grid, curve.t2.real, curve.t2.imag, curve.density, curve.g2)
        write_csv(out / name, HEADERS["t2"], rows)
        files.append(name)
        i0 = int(np.argmin(np.abs(curve.x_grid)))
        summary.append({"e_half": e_half, "file": name, "norm": curve.norm, "divergent": curve.divergent,
                        "g2_0": float(curve.g2[i0]), "g2_edge": float(curve.g2[-1])})
    return {"files": files, "curves": summary}


def run_scan(cfg: RunConfig, out: Path, workers: int) -> dict:
    e = cfg.scan_grid()
    res = scan_g20(e, cfg.params, cfg.rtol, workers)
    write_csv(out / "scan_g20.csv", HEADERS["scan-g20"], zip(res.e_half, res.g20, res.log10_g20))
    omega = cfg.omega
    failures = [{"e_half": float(x), "status": st} for x, st in zip(res.e_half, res.status) if st != "ok"]
    report = {
        "minima": [{"e_half": x, "log10_g2_0": y, "g2_0": 10.0 ** y, "side": "below" if x < omega else "above"}
                   for x, y in res.minima],
        "failures": failures,
        "points": int(e.size),
        "omega": omega,
        "divergence_threshold": DIVERGENCE_THRESHOLD,
    }
    write_json(out / "scan_minima.json", report)
    return {"files": ["scan_g20.csv", "scan_minima.json"], "minima": report["minima"], "failures": len(failures)}


def run_oracles(cfg: RunConfig, out: Path, workers: int) -> dict:
    from .oracles import run_all

    results = run_all(seed=cfg.seed)
    report = {
        "checks": [r.as_dict() for r in results],
        "all_passed": all(r.passed for r in results if not r.informational),
    }
    write_json(out / "oracle_report.json", report)
    failed = [r.name for r in results if not r.passed and not r.informational]
    return {"files": ["oracle_report.json"], "failed": failed}


def run(mode: str, cfg: RunConfig, out: Path, workers: int = 1) -> dict:
    """Execute one mode and write its outputs and manifest into ``out``.

    Returns:
        The manifest dictionary.

    Raises:
        NumericalFailure: If the computation failed (oracle failures included).
    """
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    if mode == "single":
        info = run_single(cfg, out, workers)
    elif mode in ("t2", "g2"):
        info = run_curves(cfg, out, workers, mode)
    elif mode == "scan-g20":
        info = run_scan(cfg, out, workers)
    else:
        info = run_oracles(cfg, out, workers)
    manifest = {
        "package": "wqed2p",
        "version": __version__,
        "mode": mode,
        "config": cfg.as_dict(),
        "tolerances": {"rtol": cfg.rtol, "divergence_threshold": DIVERGENCE_THRESHOLD},
        "units": {"frequency": "2 pi c / l", "x": "1 / Gamma"},
        "columns": HEADERS.get("t2" if mode == "g2" else mode, []),
        "workers": workers,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "runtime_seconds": round(time.perf_counter() - t0, 3),
        "outputs": {name: _sha256(out / name) for name in info["files"]},
        "result": {k: v for k, v in info.items() if k != "files"},
    }
    write_json(out / "manifest.json", manifest)
    if mode == "oracle-check" and info["failed"]:
        raise NumericalFailure("oracle checks failed: " + ", ".join(info["failed"]))
    return manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wqed2p",
        description="Two-photon transport through an emitter between two mirrors in a waveguide.",
        epilog=f"Presets: {', '.join(PRESETS)}. Worker count: ${WORKERS_ENV}.",
    )
    parser.add_argument("mode", choices=MODES, help="what to compute")
    parser.add_argument("--config", required=True, help="config file path or preset name")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config value (repeatable)")
    parser.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; those are configuration errors here.
        return 0 if exc.code == 0 else 1
    try:
        cfg = load_config(args.config, args.overrides).check(args.mode)
        workers = worker_count()
    except ConfigError as exc:
        print(f"wqed2p: invalid configuration: {exc}", file=sys.stderr)
        return 1
    try:
        with np.errstate(all="ignore"):
            run(args.mode, cfg, Path(args.out), workers)
    except NumericalFailure as exc:
        print(f"wqed2p: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (QuadratureError, AlgebraError, FloatingPointError) as exc:
        print(f"wqed2p: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
