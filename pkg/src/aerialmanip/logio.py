"""CSV logs, run metadata and summaries on disk.

A run directory holds

* ``log.csv``      one row per control tick, header ``name[unit]``;
* ``meta.json``    resolved config, seed, package version and the event list;
* ``summary.json`` the :class:`~aerialmanip.metrics.RunSummary` (when given).

Every file is written to a temporary name and renamed into place.
"""
from __future__ import annotations

import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import IOFailure
from .ftrls import PARAM_NAMES
from .params import COORDINATES
from .sim import LOG_FIELDS, SimLog

LOG_NAME = "log.csv"
META_NAME = "meta.json"
SUMMARY_NAME = "summary.json"

TASK_AXES = ("x", "y", "z", "psi", "theta", "phi")
ACTUATORS = ("f1", "f2", "f3", "f4", "tau1", "tau2")

# component labels and units of every log field
_LABELS = {
    "q": COORDINATES, "qd": COORDINATES, "qdd_des": COORDINATES, "tau": COORDINATES,
    "tau_dis_hat": COORDINATES,
    "chi_e": TASK_AXES, "dchi_e": TASK_AXES, "chi_r": TASK_AXES, "dchi_r": TASK_AXES,
    "F_hat": TASK_AXES, "F_e": TASK_AXES,
    "u": ACTUATORS, "h_hat": PARAM_NAMES,
}


def _component_units(name: str, width: int, unit: str) -> list[str]:
    if "|" not in unit:
        return [unit] * width
    lin, ang = unit.split("|")
    if name == "u":
        return [lin] * 4 + [ang] * 2
    return [lin] * 3 + [ang] * (width - 3)


def column_names() -> list[str]:
    cols = []
    for name, (width, unit) in LOG_FIELDS.items():
        units = _component_units(name, width, unit)
        if width == 1:
            cols.append(f"{name}[{unit}]")
            continue
        for label, u in zip(_LABELS[name], units):
            cols.append(f"{name}_{label}[{u}]")
    return cols


def atomic_write(path: Path, text: str):
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def log_to_csv(log: SimLog) -> str:
    buf = io.StringIO()
    buf.write(",".join(column_names()) + "\n")
    if len(log):
        table = np.hstack([log.data[k] for k in LOG_FIELDS])
        # 17 significant digits: the text reproduces every double exactly
        np.savetxt(buf, table, fmt="%.17g", delimiter=",")
    return buf.getvalue()


def write_log(log: SimLog, out_dir, meta: dict | None = None, summary: dict | None = None) -> dict:
    """Write the run files; returns ``{kind: path}``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IOFailure(f"cannot create {out}: {exc}") from exc
    paths = {"log": out / LOG_NAME, "meta": out / META_NAME}
    atomic_write(paths["log"], log_to_csv(log))
    m = dict(log.meta)
    m.update(meta or {})
    m["events"] = [list(e) for e in log.events]
    m["columns"] = column_names()
    atomic_write(paths["meta"], json.dumps(m, indent=2, default=_json_default) + "\n")
    if summary is not None:
        paths["summary"] = out / SUMMARY_NAME
        atomic_write(paths["summary"], json.dumps(summary, indent=2, default=_json_default) + "\n")
    return paths


def _json_default(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    raise TypeError(f"not serializable: {type(v).__name__}")


def read_log(path) -> SimLog:
    """Parse ``log.csv`` (or a run directory) back into a :class:`SimLog`."""
    p = Path(path)
    run_dir = p if p.is_dir() else p.parent
    csv_path = p / LOG_NAME if p.is_dir() else p
    try:
        with open(csv_path, encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            body = fh.read()
    except OSError as exc:
        raise IOFailure(f"cannot read {csv_path}: {exc}") from exc
    if header != column_names():
        raise IOFailure(f"{csv_path}: column header does not match the log schema")
    if body.strip():
        table = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
    else:
        table = np.zeros((0, len(header)))
    data, i = {}, 0
    for name, (width, _) in LOG_FIELDS.items():
        data[name] = table[:, i:i + width].copy()
        i += width
    log = SimLog(data)
    meta_path = run_dir / META_NAME
    if meta_path.exists():
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise IOFailure(f"cannot read {meta_path}: {exc}") from exc
        log.events = [tuple(e) for e in meta.pop("events", [])]
        meta.pop("columns", None)
        log.meta = meta
    return log
