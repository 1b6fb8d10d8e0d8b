"""Geometry of the mass-balance switching manifold.

The flip-flop field is discontinuous across the hyperplane where Northern
Hemisphere ablation balances accumulation. On that manifold, one regime's
field may push through (crossing), both may recede (repelling sliding), or
a field may be tangent; the decomposition is governed by two w-thresholds
depending only on the albedo line position.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    Branch,
    ModelParams,
    albedo_line_nullcline,
    branch_ablation_rate,
    branch_critical_temp,
    rhs4,
)

__all__ = [
    "SigmaClass",
    "classify_sigma_point",
    "critical_ice_edge",
    "epsilon_bound",
    "mass_balance",
    "normal_component",
    "tangency_separation_ok",
    "tangency_w",
]

# Below this |w - tangency| margin a crossing direction is numerically
# meaningless and the point is labeled a tangency.
TANGENCY_BAND = 1e-9


def mass_balance(state, params: ModelParams) -> float:
    """Ablation-accumulation imbalance; zero defines the switching manifold.

    Positive values put the state in the retreating region, negative in the
    advancing region.
    """
    eta_N, xi_N = float(state[2]), float(state[3])
    return float((params.a + params.b) * eta_N - params.b * xi_N - params.a)


def critical_ice_edge(eta_N: float, params: ModelParams) -> float:
    """Ice-edge position at which the mass balance vanishes for given eta_N."""
    ratio = params.a / params.b
    return (1.0 + ratio) * eta_N - ratio


def tangency_w(branch: Branch, eta_N: float, params: ModelParams) -> float:
    """w-threshold at which the branch field is tangent to the manifold.

    The threshold is the branch's albedo-line stationarity value plus a
    correction proportional to eps and to the branch's ablation offset.
    """
    if abs(eta_N) > 1.0:
        raise ValueError(f"albedo line must lie in [-1, 1], got {eta_N}")
    base = albedo_line_nullcline(eta_N, branch_critical_temp(branch, params), params)
    offset = branch_ablation_rate(branch, params) - params.b
    return float(base + params.a * params.eps * (1.0 - eta_N) * offset / (
        params.rho * (params.a + params.b)
    ))


def epsilon_bound(params: ModelParams) -> float:
    """Largest eps for which the two tangency curves provably separate.

    Below this bound the repelling sliding strip sits strictly between the
    crossing regions for every eta_N.
    """
    gap = params.T_cN_minus - params.T_cN_plus
    return gap * params.rho * (params.a + params.b) / (
        2.0 * params.a * (params.b_plus - params.b_minus)
    )


def tangency_separation_ok(params: ModelParams, n_grid: int = 201) -> bool:
    """Grid check that the retreat tangency curve lies below the advance one."""
    grid = np.linspace(-1.0, 1.0, n_grid)
    return all(
        tangency_w(Branch.RETREAT, eta, params) < tangency_w(Branch.ADVANCE, eta, params)
        for eta in grid
    )


@dataclass(frozen=True)
class SigmaClass:
    """Classification of a point on the switching manifold."""

    label: str           # crossing_plus | crossing_minus | sliding | tangency_plus | tangency_minus
    margin_plus: float   # w minus the retreat-field tangency threshold
    margin_minus: float  # w minus the advance-field tangency threshold

    def to_json_dict(self) -> dict:
        return {
            "label": self.label,
            "margin_plus": self.margin_plus,
            "margin_minus": self.margin_minus,
        }


def classify_sigma_point(
    state,
    params: ModelParams,
    *,
    event_tol: float = 1e-12,
    tangency_band: float = TANGENCY_BAND,
) -> SigmaClass:
    """Label a manifold point as crossing, sliding, or tangency.

    The w-margins against the two tangency thresholds decide the label;
    they are numerically better conditioned than the field-normal dot
    products, which normal_component retains as a cross-check.
    """
    balance = mass_balance(state, params)
    if abs(balance) >= event_tol:
        raise ValueError(
            f"state is not on the switching manifold (mass balance {balance:.3e})"
        )
    w, eta_N = float(state[0]), float(state[2])
    margin_plus = float(w - tangency_w(Branch.RETREAT, eta_N, params))
    margin_minus = float(w - tangency_w(Branch.ADVANCE, eta_N, params))
    if abs(margin_plus) < tangency_band:
        label = "tangency_plus"
    elif abs(margin_minus) < tangency_band:
        label = "tangency_minus"
    elif margin_plus < 0.0:
        label = "crossing_plus"
    elif margin_minus > 0.0:
        label = "crossing_minus"
    else:
        label = "sliding"
    return SigmaClass(label=label, margin_plus=margin_plus, margin_minus=margin_minus)


def normal_component(branch: Branch, state, params: ModelParams) -> float:
    """Dot product of the branch field with the manifold normal.

    Positive means the field pushes toward the retreating region. Used to
    cross-check the margin-based classification.
    """
    normal = np.array([0.0, 0.0, 1.0 + params.a / params.b, -1.0])
    return float(rhs4(branch, state, params) @ normal)
