"""Command-line entry point.

    aerialmanip simulate [config.yaml] [--out DIR] [--seed N] [--duration S]
    aerialmanip validate [config.yaml]
    aerialmanip analyze RUN_DIR_OR_CSV [--json]
    aerialmanip plots RUN_DIR_OR_CSV [--out DIR]

Exit codes: 0 ok, 1 simulation diverged, 2 invalid configuration, 3 file IO.
Errors are reported on stderr as a single ``error: <kind>: <message>`` line.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import config_from_dict, config_to_dict, load_config
from .errors import (
    ConfigError,
    ConstraintViolation,
    DivergenceDetected,
    IOFailure,
    UnstableImpedanceConfig,
)
from .logio import atomic_write, read_log, write_log
from .metrics import AXES, summarize
from .sim import ScenarioConfig, run_scenario, validate_config

OUT_ENV = "AERIALMANIP_OUT"
DEFAULT_OUT = "runs"

EXIT_OK, EXIT_DIVERGED, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


class _Fail(Exception):
    def __init__(self, code, kind, message):
        super().__init__(message)
        self.code, self.kind = code, kind


def _config(path) -> ScenarioConfig:
    if path is None:
        return ScenarioConfig()
    try:
        return load_config(path)
    except ConfigError as exc:
        raise _Fail(EXIT_CONFIG, "config", str(exc)) from exc
    except OSError as exc:
        raise _Fail(EXIT_IO, "io", f"cannot read {path}: {exc.strerror or exc}") from exc


def _validate(cfg: ScenarioConfig):
    try:
        return validate_config(cfg)
    except ConstraintViolation as exc:
        raise _Fail(EXIT_CONFIG, "robustness", str(exc)) from exc
    except UnstableImpedanceConfig as exc:
        raise _Fail(EXIT_CONFIG, "impedance", str(exc)) from exc


def cmd_validate(args) -> int:
    cfg = _config(args.config)
    reports, ed = _validate(cfg)
    for r in reports:
        print(f"{r.name:7s} alpha={r.alpha:.4g} alpha*g={r.alpha_g:.4g} <= {r.limit:.4g} "
              f"damping={r.damping:.3f} ok")
    print(f"impedance error dynamics Hurwitz, slowest real part {ed.slowest:.4g} 1/s")
    return EXIT_OK


def _progress(k, n):
    if k % 1000 == 0:
        print(f"\r  t = {k // 1000:4d} s / {n // 1000} s", end="", file=sys.stderr, flush=True)


def cmd_simulate(args) -> int:
    cfg = _config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, rng_seed=args.seed)
    if args.duration is not None:
        cfg = replace(cfg, duration=args.duration)
    _validate(cfg)
    out = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    meta = {"config": config_to_dict(cfg), "seed": cfg.rng_seed, "version": __version__}
    code = EXIT_OK
    try:
        log = run_scenario(cfg, progress=None if args.quiet else _progress)
    except DivergenceDetected as exc:
        log, code = exc.log, EXIT_DIVERGED
        meta["diverged"] = str(exc)
    if not args.quiet:
        print(file=sys.stderr)
    summary = summarize(log, params=cfg.robot) if len(log) else None
    try:
        paths = write_log(log, out, meta, summary.to_dict() if summary else None)
    except IOFailure as exc:
        raise _Fail(EXIT_IO, "io", str(exc)) from exc
    if summary is not None:
        print("\n".join(summary.lines()))
    print(f"wrote {paths['log']}")
    if code:
        raise _Fail(code, "diverged", meta["diverged"])
    return code


def _load_log(path):
    try:
        return read_log(path)
    except IOFailure as exc:
        raise _Fail(EXIT_IO, "io", str(exc)) from exc


def cmd_analyze(args) -> int:
    log = _load_log(args.log)
    params = None
    if isinstance(log.meta.get("config"), dict):
        try:
            params = config_from_dict(log.meta["config"]).robot
        except ConfigError as exc:
            raise _Fail(EXIT_CONFIG, "config", f"run metadata: {exc}") from exc
    s = summarize(log, params=params)
    if args.json:
        print(json.dumps(s.to_dict(), indent=2))
    else:
        print("\n".join(s.lines()))
    return EXIT_OK


PLOT_SCRIPT = '''"""Force-estimation and tracking error charts for one run (needs matplotlib)."""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
AXES = ("x", "y", "z", "psi", "theta", "phi")


def read(name):
    with open(here / name, newline="") as fh:
        rows = list(csv.reader(fh))
    cols = list(zip(*[[float(v) for v in r] for r in rows[1:]]))
    return rows[0], cols


for name, title, ylabel in (("force_error.csv", "Contact force estimation error", "|F_hat - F_e|"),
                            ("tracking_error.csv", "End-effector tracking error", "chi_r - chi_e"),
                            ("parameters.csv", "Environment parameter estimates", "estimate")):
    head, cols = read(name)
    fig, axs = plt.subplots(len(head) - 1, 1, sharex=True, figsize=(8, 1.6 * (len(head) - 1)))
    for ax, label, col in zip(axs, head[1:], cols[1:]):
        ax.plot(cols[0], col, lw=0.8)
        ax.set_ylabel(label, fontsize=8)
        ax.grid(alpha=0.3)
    axs[0].set_title(title)
    axs[-1].set_xlabel("t [s]")
    fig.tight_layout()
    fig.savefig(here / name.replace(".csv", ".png"), dpi=120)
if "--show" in sys.argv:
    plt.show()
'''


def _table(t, cols, names) -> str:
    lines = [",".join(["t[s]"] + list(names))]
    for i in range(len(t)):
        lines.append(",".join(f"{v:.9g}" for v in [t[i], *cols[i]]))
    return "\n".join(lines) + "\n"


def cmd_plots(args) -> int:
    log = _load_log(args.log)
    src = Path(args.log)
    out = Path(args.out) if args.out else (src if src.is_dir() else src.parent) / "plots"
    step = max(1, int(args.every))
    t = log.t[::step]
    ef = np.abs(log.F_hat - log.F_e)[::step]
    et = (log.chi_r - log.chi_e)[::step]
    hl = log.h_hat[::step, 9:21]
    units = ("N", "N", "N", "N m", "N m", "N m")
    try:
        out.mkdir(parents=True, exist_ok=True)
        atomic_write(out / "force_error.csv", _table(t, ef, [f"{a}[{u}]" for a, u in zip(AXES, units)]))
        atomic_write(out / "tracking_error.csv",
                      _table(t, et, [f"{a}[{'m' if i < 3 else 'rad'}]" for i, a in enumerate(AXES)]))
        atomic_write(out / "parameters.csv",
                      _table(t, hl, [f"Sc_{a}" for a in AXES] + [f"Dc_{a}" for a in AXES]))
        atomic_write(out / "plot_run.py", PLOT_SCRIPT)
    except (OSError, IOFailure) as exc:
        raise _Fail(EXIT_IO, "io", str(exc)) from exc
    print(f"wrote {out / 'plot_run.py'} (run it with python3 to render PNGs)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aerialmanip", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scenario and write log.csv, meta.json and summary.json")
    s.add_argument("config", nargs="?", help="YAML scenario file (defaults when omitted)")
    s.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./{DEFAULT_OUT})")
    s.add_argument("--seed", type=int, help="override the noise seed")
    s.add_argument("--duration", type=float, help="override the simulated time [s]")
    s.add_argument("--quiet", action="store_true", help="no progress output")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("validate", help="check observer robustness and impedance stability")
    v.add_argument("config", nargs="?", help="YAML scenario file (defaults when omitted)")
    v.set_defaults(func=cmd_validate)

    a = sub.add_parser("analyze", help="print the run summary of a log")
    a.add_argument("log", help="run directory or log.csv")
    a.add_argument("--json", action="store_true", help="machine-readable output")
    a.set_defaults(func=cmd_analyze)

    pl = sub.add_parser("plots", help="write chart data and a matplotlib script for a log")
    pl.add_argument("log", help="run directory or log.csv")
    pl.add_argument("--out", help="destination directory (default: <run>/plots)")
    pl.add_argument("--every", type=int, default=10, help="keep every n-th sample (default 10)")
    pl.set_defaults(func=cmd_plots)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"error: {exc.kind}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
