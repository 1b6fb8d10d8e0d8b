"""Figure rendering with the study's curve conventions.

Curve styling follows the source figures: the northern albedo line is a
dashed black curve, the ice edge a dotted brown curve, and the mirrored
southern albedo line a solid blue curve. Rendering is deterministic: fixed
backend, dpi, and metadata, so re-rendering the same inputs reproduces the
same bytes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import (
    SchemaError,
    read_cycle,
    read_equilibria,
    read_nullclines,
    read_sweep,
    read_timeseries,
)

KINDS = ("timeseries", "cycle3d", "nullclines", "sweep-amplitudes")

LINE_STYLES = {
    "eta_N": {"color": "black", "linestyle": "--", "label": r"$\eta_N$"},
    "xi_N": {"color": "brown", "linestyle": ":", "label": r"$\xi_N$"},
    "neg_eta_S": {"color": "blue", "linestyle": "-", "label": r"$-\eta_S$"},
}

_SAVE_OPTS = {"dpi": 150, "metadata": {"Software": "glacialfigs"}}


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    in_dir: Path
    out_file: Path
    styles: dict = field(default_factory=lambda: LINE_STYLES)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; choose from {KINDS}")


def render(spec: FigureSpec) -> Path:
    """Render one figure from the CLI outputs in spec.in_dir."""
    renderer = {
        "timeseries": _render_timeseries,
        "cycle3d": _render_cycle3d,
        "nullclines": _render_nullclines,
        "sweep-amplitudes": _render_sweep,
    }[spec.kind]
    fig = renderer(spec)
    try:
        spec.out_file.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(spec.out_file, **_SAVE_OPTS)
    finally:
        plt.close(fig)
    return spec.out_file


def _render_timeseries(spec: FigureSpec):
    table = read_timeseries(spec.in_dir)
    fig, ax = plt.subplots(figsize=(7.0, 3.2))
    ax.plot(table.t, -table.eta_S, **spec.styles["neg_eta_S"])
    ax.plot(table.t, table.eta_N, **spec.styles["eta_N"])
    if table.xi_N is not None:
        ax.plot(table.t, table.xi_N, **spec.styles["xi_N"])
    ax.set_xlabel(r"$t$")
    ax.set_ylabel("sine of latitude")
    ax.margins(x=0.05, y=0.05)
    ax.legend(loc="best", frameon=False)
    fig.tight_layout()
    return fig


def _render_cycle3d(spec: FigureSpec):
    table = read_cycle(spec.in_dir)
    # close the loop back to the starting crossing
    eta_S = np.append(table.eta_S, table.eta_S[0])
    eta_N = np.append(table.eta_N, table.eta_N[0])
    xi_N = np.append(table.xi_N, table.xi_N[0])
    fig = plt.figure(figsize=(4.8, 4.2))
    ax = fig.add_subplot(projection="3d")
    ax.plot(eta_S, eta_N, xi_N, color="black", linewidth=1.2)
    ax.set_xlabel(r"$\eta_S$")
    ax.set_ylabel(r"$\eta_N$")
    ax.set_zlabel(r"$\xi_N$")
    fig.tight_layout()
    return fig


def _render_nullclines(spec: FigureSpec):
    (curve_s, curve_n, curve_w), (surf_s, surf_n, surf_w) = read_nullclines(spec.in_dir)
    points = read_equilibria(spec.in_dir)
    fig = plt.figure(figsize=(9.0, 4.0))
    left = fig.add_subplot(1, 2, 1, projection="3d")
    left.plot_trisurf(surf_s, surf_n, surf_w, color="green", alpha=0.45, linewidth=0.0)
    left.plot(curve_s, curve_n, curve_w, color="red", linewidth=1.6)
    for record in points:
        w, eta_s, eta_n = record["point"][:3]
        left.scatter([eta_s], [eta_n], [w], color="black", s=18)
    left.set_xlabel(r"$\eta_S$")
    left.set_ylabel(r"$\eta_N$")
    left.set_zlabel(r"$w$")
    right = fig.add_subplot(1, 2, 2)
    right.plot(curve_s, curve_n, color="red", linewidth=1.6)
    for record in points:
        right.scatter([record["point"][1]], [record["point"][2]], color="black", s=18)
    right.set_xlabel(r"$\eta_S$")
    right.set_ylabel(r"$\eta_N$")
    right.margins(0.05)
    fig.tight_layout()
    return fig


def _render_sweep(spec: FigureSpec):
    rows = read_sweep(spec.in_dir)
    axis = "T_cN_minus" if len({r["T_cN_minus"] for r in rows}) > 1 else "eps"
    rows = sorted(rows, key=lambda r: float(r[axis]))
    x = [float(r[axis]) for r in rows]
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    series = [
        ("amplitude_etaN", LINE_STYLES["eta_N"]),
        ("amplitude_xiN", LINE_STYLES["xi_N"]),
        ("amplitude_etaS", LINE_STYLES["neg_eta_S"]),
    ]
    for column, style in series:
        ax.plot(x, [float(r[column]) for r in rows], marker="o",
                color=style["color"], linestyle=style["linestyle"],
                label=column.replace("amplitude_", "amp "))
    ax.set_xlabel(axis)
    ax.set_ylabel("peak-to-peak amplitude")
    ax.margins(0.05)
    ax.legend(loc="best", frameon=False)
    fig.tight_layout()
    return fig


__all__ = ["FigureSpec", "KINDS", "LINE_STYLES", "SchemaError", "render"]
