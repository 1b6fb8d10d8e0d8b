"""Equilibria of the reduced flows and their lifts to the flip-flop system.

Newton iteration with the analytic Jacobian locates the interior equilibria
of the (w, eta_S, eta_N) field; eigenvalues come from the closed-form cubic
(the matrices are 3x3, and the lifted 4x4 Jacobian contributes one known
extra eigenvalue), so no general eigensolver is involved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .model import (
    Branch,
    ClimateState3,
    ClimateState4,
    ModelParams,
    branch_ablation_rate,
    branch_critical_temp,
    derived_constants,
    mean_temp_nullcline,
    rhs3,
    rhs4,
)
from .legendre import _deriv_scalar, _eval_scalar
from .switching import mass_balance

__all__ = [
    "EquilibriumReport",
    "classify_equilibrium",
    "find_equilibria3",
    "jacobian3",
    "lift_to_4d",
]

_RESIDUAL_TOL = 1e-9
_DEDUP_TOL = 1e-6


@dataclass(frozen=True)
class EquilibriumReport:
    point: Union[ClimateState3, ClimateState4]
    jacobian: np.ndarray
    eigenvalues: tuple[complex, ...]
    stability: str               # "stable node" | "saddle" | "other"
    filippov_class: str          # "regular" | "virtual" | "boundary" | "n/a"
    branch: Optional[Branch]

    def to_json_dict(self) -> dict:
        return {
            "point": list(self.point),
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "stability": self.stability,
            "filippov_class": self.filippov_class,
            "branch": self.branch.value if self.branch is not None else None,
        }


def jacobian3(state, t_crit_south: float, t_crit_north: float, params: ModelParams) -> np.ndarray:
    """Analytic Jacobian of rhs3; every entry is a closed form.

    The polynomial entries are evaluated without domain checks so Newton
    iterates may overshoot the state space transiently.
    """
    _, eta_S, eta_N = float(state[0]), float(state[1]), float(state[2])
    d = derived_constants(params)
    s = params.insolation.s_coeffs
    s0 = s[0]

    def s_val(eta):
        return sum(c * _eval_scalar(2 * m, eta) for m, c in enumerate(s))

    def s_slope(eta):
        return sum(c * _deriv_scalar(2 * m, eta) for m, c in enumerate(s) if m > 0)

    # d/deta of the w-nullcline value: the band integral differentiates to
    # -+ s at its endpoints.
    half_band = 0.5 * params.C * d.L * s0 * (params.alpha1 - params.alpha2) / params.B
    df_dS = half_band * s_val(eta_S)
    df_dN = -half_band * s_val(eta_N)
    line_slope = -d.L * (1.0 - d.alpha0)

    def nullcline_slope(eta):
        return line_slope * s_slope(eta)

    br = params.B / params.R
    return np.array(
        [
            [-br, br * df_dS, br * df_dN],
            [-params.rho, params.rho * nullcline_slope(eta_S), 0.0],
            [params.rho, 0.0, -params.rho * nullcline_slope(eta_N)],
        ]
    )


def _eigenvalues_3x3(jac: np.ndarray) -> tuple[complex, complex, complex]:
    """Roots of the characteristic cubic, via the trigonometric/Cardano forms."""
    trace = jac[0, 0] + jac[1, 1] + jac[2, 2]
    minors = (
        jac[1, 1] * jac[2, 2] - jac[1, 2] * jac[2, 1]
        + jac[0, 0] * jac[2, 2] - jac[0, 2] * jac[2, 0]
        + jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    )
    det = (
        jac[0, 0] * (jac[1, 1] * jac[2, 2] - jac[1, 2] * jac[2, 1])
        - jac[0, 1] * (jac[1, 0] * jac[2, 2] - jac[1, 2] * jac[2, 0])
        + jac[0, 2] * (jac[1, 0] * jac[2, 1] - jac[1, 1] * jac[2, 0])
    )
    # lambda^3 - trace lambda^2 + minors lambda - det = 0; the substitution
    # lambda = x + trace/3 gives the depressed form x^3 + p x + q = 0.
    shift = trace / 3.0
    p = minors - trace**2 / 3.0
    q = -2.0 * trace**3 / 27.0 + trace * minors / 3.0 - det
    half_q = q / 2.0
    third_p = p / 3.0
    disc = half_q * half_q + third_p**3
    if disc <= 0.0:
        # Three real roots (the generic case for this model).
        r = math.sqrt(-third_p)
        arg = min(1.0, max(-1.0, half_q / (r**3))) if r > 0 else 0.0
        theta = math.acos(-arg)
        roots = [2.0 * r * math.cos((theta - 2.0 * math.pi * k) / 3.0) for k in range(3)]
        eig = [complex(x + shift, 0.0) for x in roots]
    else:
        sq = math.sqrt(disc)
        u = math.copysign(abs(-half_q + sq) ** (1.0 / 3.0), -half_q + sq)
        v = math.copysign(abs(-half_q - sq) ** (1.0 / 3.0), -half_q - sq)
        real_root = u + v
        real_part = -(u + v) / 2.0
        imag_part = (u - v) * math.sqrt(3.0) / 2.0
        eig = [
            complex(real_root + shift, 0.0),
            complex(real_part + shift, imag_part),
            complex(real_part + shift, -imag_part),
        ]
    eig.sort(key=lambda z: (z.real, z.imag))
    return tuple(eig)


def _stability_label(eigenvalues) -> str:
    if any(abs(z.imag) > 1e-9 for z in eigenvalues):
        return "other"
    reals = [z.real for z in eigenvalues]
    if all(x < 0 for x in reals):
        return "stable node"
    if any(x < 0 for x in reals) and any(x > 0 for x in reals):
        return "saddle"
    return "other"


def find_equilibria3(
    t_crit_south: float,
    t_crit_north: float,
    params: ModelParams,
    *,
    seeds_per_axis: int = 9,
) -> list[EquilibriumReport]:
    """Locate interior equilibria of rhs3 by Newton iteration from a seed grid.

    Seeds cover (eta_S, eta_N) in [-0.99, 0.99]^2 with eta_S < eta_N and
    start w on the w-nullcline. Converged roots are deduplicated and
    reported with eigenvalues and a stability label; an empty list means no
    seed converged.
    """
    grid = np.linspace(-0.99, 0.99, seeds_per_axis)
    found: list[np.ndarray] = []
    for eta_S0 in grid:
        for eta_N0 in grid:
            if eta_S0 >= eta_N0:
                continue
            root = _newton3(
                np.array([mean_temp_nullcline(eta_S0, eta_N0, params), eta_S0, eta_N0]),
                t_crit_south,
                t_crit_north,
                params,
            )
            if root is None:
                continue
            if not (-1.0 < root[1] < root[2] < 1.0):
                continue
            if any(np.max(np.abs(root - other)) < _DEDUP_TOL for other in found):
                continue
            found.append(root)
    found.sort(key=lambda v: (v[2], v[1], v[0]))
    reports = []
    for root in found:
        jac = jacobian3(root, t_crit_south, t_crit_north, params)
        eig = _eigenvalues_3x3(jac)
        reports.append(
            EquilibriumReport(
                point=ClimateState3(*map(float, root)),
                jacobian=jac,
                eigenvalues=eig,
                stability=_stability_label(eig),
                filippov_class="n/a",
                branch=None,
            )
        )
    return reports


def _newton3(v0, t_crit_south, t_crit_north, params, max_iter=60) -> Optional[np.ndarray]:
    v = np.array(v0, dtype=float)
    for _ in range(max_iter):
        f = rhs3(v, t_crit_south, t_crit_north, params)
        if np.max(np.abs(f)) < 1e-13:
            return v
        try:
            step = np.linalg.solve(jacobian3(v, t_crit_south, t_crit_north, params), f)
        except np.linalg.LinAlgError:
            return None
        v = v - step
        if not np.all(np.isfinite(v)) or np.max(np.abs(v)) > 1e3:
            return None
    return None


def lift_to_4d(branch: Branch, eq3: EquilibriumReport, params: ModelParams) -> EquilibriumReport:
    """Append the slaved ice-edge coordinate to a reduced-flow equilibrium.

    The ice edge sits at (1 + a/b_branch) eta_N - a/b_branch; the lifted
    Jacobian gains the column (0, 0, 0, -eps b_branch)^T, so exactly one
    eigenvalue -eps b_branch joins the spectrum.
    """
    w, eta_S, eta_N = eq3.point
    t_crit_n = branch_critical_temp(branch, params)
    residual = np.max(np.abs(rhs3(eq3.point, params.T_cS, t_crit_n, params)))
    if residual > _RESIDUAL_TOL:
        raise ValueError(
            f"point is not an equilibrium of the {branch.value} flow (residual {residual:.2e})"
        )
    b_branch = branch_ablation_rate(branch, params)
    ratio = params.a / b_branch
    xi_N = (1.0 + ratio) * eta_N - ratio
    point4 = ClimateState4(w, eta_S, eta_N, float(xi_N))
    jac4 = np.zeros((4, 4))
    jac4[:3, :3] = eq3.jacobian
    jac4[3, 2] = params.eps * (b_branch + params.a)
    jac4[3, 3] = -params.eps * b_branch
    eigenvalues = tuple(sorted(
        list(eq3.eigenvalues) + [complex(-params.eps * b_branch, 0.0)],
        key=lambda z: (z.real, z.imag),
    ))
    return EquilibriumReport(
        point=point4,
        jacobian=jac4,
        eigenvalues=eigenvalues,
        stability=_stability_label(eigenvalues),
        filippov_class=classify_equilibrium(point4, branch, params),
        branch=branch,
    )


def classify_equilibrium(point4, branch: Branch, params: ModelParams, *, boundary_tol: float = 1e-12) -> str:
    """Regular / virtual / boundary label of a branch equilibrium.

    A branch equilibrium lying in the other branch's region is virtual: its
    own flow can never reach it without first crossing the switching
    manifold.
    """
    balance = mass_balance(point4, params)
    if abs(balance) < boundary_tol:
        return "boundary"
    own_region_sign = 1.0 if branch is Branch.RETREAT else -1.0
    return "regular" if balance * own_region_sign > 0.0 else "virtual"
