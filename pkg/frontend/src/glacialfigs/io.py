"""Readers for the simulation CLI's documented CSV/JSON outputs."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TRAJECTORY_COLUMNS = ["t", "w", "eta_S", "eta_N", "xi_N", "branch"]
NULLCLINE_COLUMNS = ["kind", "eta_S", "eta_N", "w"]


class SchemaError(ValueError):
    """Input file does not match the documented schema."""


@dataclass
class TrajectoryTable:
    t: np.ndarray
    w: np.ndarray
    eta_S: np.ndarray
    eta_N: np.ndarray
    xi_N: np.ndarray | None   # None when the run had no ice-edge column
    branch: list[str]


def _read_rows(path: Path, columns: list[str]) -> list[dict]:
    if not path.exists():
        raise SchemaError(f"input file missing: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != columns:
            raise SchemaError(
                f"{path.name}: expected columns {columns}, found {reader.fieldnames}"
            )
        return list(reader)


def read_trajectory(path: Path) -> TrajectoryTable:
    rows = _read_rows(path, TRAJECTORY_COLUMNS)
    if not rows:
        raise SchemaError(f"{path.name}: empty trajectory")
    has_edge = all(r["xi_N"] != "" for r in rows)
    return TrajectoryTable(
        t=np.array([float(r["t"]) for r in rows]),
        w=np.array([float(r["w"]) for r in rows]),
        eta_S=np.array([float(r["eta_S"]) for r in rows]),
        eta_N=np.array([float(r["eta_N"]) for r in rows]),
        xi_N=np.array([float(r["xi_N"]) for r in rows]) if has_edge else None,
        branch=[r["branch"] for r in rows],
    )


def read_cycle(in_dir: Path) -> TrajectoryTable:
    """Concatenate the two cycle legs into one closed revolution."""
    advance = read_trajectory(in_dir / "cycle_advance.csv")
    retreat = read_trajectory(in_dir / "cycle_retreat.csv")
    if advance.xi_N is None or retreat.xi_N is None:
        raise SchemaError("cycle segments must carry the ice-edge column")
    return TrajectoryTable(
        t=np.concatenate([advance.t, retreat.t]),
        w=np.concatenate([advance.w, retreat.w]),
        eta_S=np.concatenate([advance.eta_S, retreat.eta_S]),
        eta_N=np.concatenate([advance.eta_N, retreat.eta_N]),
        xi_N=np.concatenate([advance.xi_N, retreat.xi_N]),
        branch=advance.branch + retreat.branch,
    )


def read_timeseries(in_dir: Path) -> TrajectoryTable:
    """A simulate trajectory if present, otherwise the stitched cycle."""
    single = in_dir / "trajectory.csv"
    if single.exists():
        return read_trajectory(single)
    return read_cycle(in_dir)


def read_nullclines(in_dir: Path):
    rows = _read_rows(in_dir / "nullclines.csv", NULLCLINE_COLUMNS)
    if not rows:
        raise SchemaError("nullclines.csv: no samples")
    curve = [r for r in rows if r["kind"] == "eta_nullcline"]
    surface = [r for r in rows if r["kind"] == "w_surface"]
    as_arrays = lambda rs: (
        np.array([float(r["eta_S"]) for r in rs]),
        np.array([float(r["eta_N"]) for r in rs]),
        np.array([float(r["w"]) for r in rs]),
    )
    return as_arrays(curve), as_arrays(surface)


def read_equilibria(in_dir: Path) -> list[dict]:
    path = in_dir / "equilibria.json"
    if not path.exists():
        raise SchemaError(f"input file missing: {path}")
    payload = json.loads(path.read_text())
    if "equilibria" not in payload:
        raise SchemaError("equilibria.json: missing 'equilibria' field")
    return payload["equilibria"]


def read_sweep(in_dir: Path) -> list[dict]:
    path = in_dir / "sweep.csv"
    if not path.exists():
        raise SchemaError(f"input file missing: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "T_cN_minus" not in reader.fieldnames:
            raise SchemaError("sweep.csv: unrecognized header")
        rows = [r for r in reader if r["converged"] == "true"]
    if not rows:
        raise SchemaError("sweep.csv: no converged rows to plot")
    return rows
