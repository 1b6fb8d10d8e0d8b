"""Core energy balance model: parameters, vector fields, temperature profiles.

The reduced climate state is (w, eta_S, eta_N): a translated global mean
surface temperature coupled to the sine-of-latitude positions of the
Southern and Northern Hemisphere albedo lines. The full flip-flop state
appends the Northern Hemisphere ice edge xi_N, whose mass balance selects
between an advancing and a retreating regime.

Time is measured in years throughout; temperatures in degrees Celsius.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .legendre import (
    InsolationModel,
    _anti_scalar,
    _eval_scalar,
    insolation,
    insolation_coeffs,
    insolation_integral,
    legendre_eval,
)

__all__ = [
    "Branch",
    "ClimateState3",
    "ClimateState4",
    "ConfigError",
    "DerivedConstants",
    "ModelParams",
    "SpectralState",
    "TemperatureProfile",
    "albedo_line_nullcline",
    "boundary_margin",
    "branch_ablation_rate",
    "branch_critical_temp",
    "derived_constants",
    "mean_temp_nullcline",
    "rhs3",
    "rhs4",
    "spectral_rhs",
    "temperature_profile",
]


class ConfigError(ValueError):
    """Raised when model parameters violate their invariants."""


class Branch(enum.Enum):
    """Mass-balance regime of the Northern Hemisphere ice sheet."""

    ADVANCE = "advance"   # glacial: low ablation, warmer critical temperature
    RETREAT = "retreat"   # interglacial: high ablation, colder critical temperature


class ClimateState3(NamedTuple):
    w: float
    eta_S: float
    eta_N: float


class ClimateState4(NamedTuple):
    w: float
    eta_S: float
    eta_N: float
    xi_N: float


def _default_insolation() -> InsolationModel:
    return insolation_coeffs(23.5, 1)


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the model; defaults reproduce the study regime.

    Units: R in W m^-2 K^-1 yr, Q, A in W m^-2, B, C in W m^-2 K^-1,
    critical temperatures in degrees C, rho in K^-1 yr^-1, eps in yr^-1;
    albedos and accumulation/ablation rates are dimensionless.
    """

    R: float = 1.0
    Q: float = 343.0
    A: float = 202.0
    B: float = 1.9
    C: float = 3.04
    alpha1: float = 0.32
    alpha2: float = 0.62
    T_cS: float = -10.0
    T_cN_plus: float = -10.0
    T_cN_minus: float = -5.0
    rho: float = 0.3
    a: float = 1.05
    b: float = 1.75
    b_minus: float = 1.5
    b_plus: float = 5.0
    eps: float = 0.03
    insolation: InsolationModel = field(default_factory=_default_insolation)

    def __post_init__(self):
        if not self.alpha1 < self.alpha2:
            raise ConfigError(
                f"albedo must increase poleward: alpha1={self.alpha1} >= alpha2={self.alpha2}"
            )
        if not self.b_minus < self.b < self.b_plus:
            raise ConfigError(
                f"ablation rates must satisfy b_minus < b < b_plus, got "
                f"{self.b_minus}, {self.b}, {self.b_plus}"
            )
        if not self.T_cN_plus < self.T_cN_minus:
            raise ConfigError(
                f"retreat critical temperature must be colder than advance: "
                f"T_cN_plus={self.T_cN_plus} >= T_cN_minus={self.T_cN_minus}"
            )
        for name in ("R", "Q", "B", "C", "rho", "eps", "a"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"parameter {name} must be positive, got {getattr(self, name)}")


@dataclass(frozen=True)
class DerivedConstants:
    """Constants derived from ModelParams once per parameter set."""

    L: float            # Q / (B + C)
    alpha0: float       # mean of the two albedos
    z_star: float       # equilibrium of the icy/temperate mode-0 split
    u_star: tuple[float, ...]  # equilibrium icy-region mode amplitudes, m >= 1
    v_star: tuple[float, ...]  # equilibrium temperate-region mode amplitudes, m >= 1


@lru_cache(maxsize=None)
def derived_constants(params: ModelParams) -> DerivedConstants:
    L = params.Q / (params.B + params.C)
    alpha0 = 0.5 * (params.alpha1 + params.alpha2)
    s = params.insolation.s_coeffs
    z_star = L * s[0] * (params.alpha1 - params.alpha2)
    u_star = tuple(L * s_2m * (1.0 - params.alpha2) for s_2m in s[1:])
    v_star = tuple(L * s_2m * (1.0 - params.alpha1) for s_2m in s[1:])
    return DerivedConstants(L=L, alpha0=alpha0, z_star=z_star, u_star=u_star, v_star=v_star)


def branch_critical_temp(branch: Branch, params: ModelParams) -> float:
    return params.T_cN_minus if branch is Branch.ADVANCE else params.T_cN_plus


def branch_ablation_rate(branch: Branch, params: ModelParams) -> float:
    return params.b_minus if branch is Branch.ADVANCE else params.b_plus


def _require_line_order(eta_S: float, eta_N: float) -> None:
    if not (-1.0 <= eta_S <= eta_N <= 1.0):
        raise ValueError(
            f"albedo lines must satisfy -1 <= eta_S <= eta_N <= 1, got ({eta_S}, {eta_N})"
        )


def _band_integral(eta_S: float, eta_N: float, params: ModelParams) -> float:
    total = 0.0
    for m, c in enumerate(params.insolation.s_coeffs):
        total += c * (_anti_scalar(2 * m, eta_N) - _anti_scalar(2 * m, eta_S))
    return total


def _mean_temp_target(eta_S: float, eta_N: float, params: ModelParams) -> float:
    # Unchecked fast path shared with the vector fields.
    d = derived_constants(params)
    s0 = params.insolation.s_coeffs[0]
    band = _band_integral(eta_S, eta_N, params)
    return (
        params.Q * s0 * (1.0 - d.alpha0)
        - params.A
        + 0.5 * params.C * d.L * s0 * (params.alpha1 - params.alpha2) * (1.0 - band)
    ) / params.B


def mean_temp_nullcline(eta_S: float, eta_N: float, params: ModelParams) -> float:
    """Quasi-equilibrium value of w for fixed albedo lines (the w-nullcline).

    The degenerate interval eta_S = eta_N (snowball) is admitted; the
    inter-line insolation integral is then zero.
    """
    _require_line_order(eta_S, eta_N)
    return float(_mean_temp_target(eta_S, eta_N, params))


def albedo_line_nullcline(eta: float, critical_temp: float, params: ModelParams) -> float:
    """w-value at which an albedo line at eta is stationary.

    The same expression realizes the stationarity curve of either hemisphere
    and of either flip-flop regime; only the critical temperature differs.
    """
    if abs(eta) > 1.0:
        raise ValueError(f"albedo line must lie in [-1, 1], got {eta}")
    d = derived_constants(params)
    return float(-d.L * (1.0 - d.alpha0) * (insolation(eta, params.insolation) - 1.0) + critical_temp)


def _albedo_line_target(eta: float, critical_temp: float, params: ModelParams) -> float:
    # Unchecked fast path: s(eta) - 1 summed over the modes of positive order.
    d = derived_constants(params)
    s = params.insolation.s_coeffs
    total = 0.0
    for m in range(1, len(s)):
        total += s[m] * _eval_scalar(2 * m, eta)
    return -d.L * (1.0 - d.alpha0) * total + critical_temp


def rhs3(state, t_crit_south: float, t_crit_north: float, params: ModelParams) -> np.ndarray:
    """Time derivative of (w, eta_S, eta_N), in units per year.

    Critical temperatures are explicit arguments so the same field serves
    the equal-temperature study, the asymmetric study, and both flip-flop
    regimes. Interior validity is the caller's responsibility: embedded
    Runge-Kutta stages may probe marginally outside the state space.
    """
    w, eta_S, eta_N = float(state[0]), float(state[1]), float(state[2])
    return np.array(
        [
            -(params.B / params.R) * (w - _mean_temp_target(eta_S, eta_N, params)),
            -params.rho * (w - _albedo_line_target(eta_S, t_crit_south, params)),
            params.rho * (w - _albedo_line_target(eta_N, t_crit_north, params)),
        ]
    )


def rhs4(branch: Branch, state, params: ModelParams) -> np.ndarray:
    """Time derivative of (w, eta_S, eta_N, xi_N) on one flip-flop branch.

    The first three components coincide with rhs3 under the branch's
    critical temperatures; the ice edge responds to the accumulation-ablation
    imbalance at rate eps.
    """
    eta_N, xi_N = float(state[2]), float(state[3])
    core = rhs3(state[:3], params.T_cS, branch_critical_temp(branch, params), params)
    b_abl = branch_ablation_rate(branch, params)
    xi_dot = params.eps * (b_abl * (eta_N - xi_N) - params.a * (1.0 - eta_N))
    return np.array([core[0], core[1], core[2], xi_dot])


def boundary_margin(state) -> float:
    """Distance-like margin to the state-space boundary; positive inside.

    Accepts a 3- or 4-dimensional state. The minimum runs over the pole
    constraints on each line and the no-crossing constraint eta_S <= eta_N.
    """
    eta_S, eta_N = float(state[1]), float(state[2])
    margins = [1.0 + eta_S, 1.0 - eta_N, eta_N - eta_S]
    if len(state) > 3:
        xi_N = float(state[3])
        margins += [1.0 + xi_N, 1.0 - xi_N]
    return min(margins)


@dataclass(frozen=True)
class TemperatureProfile:
    """Reconstructed latitudinal temperature at fixed (w, eta_S, eta_N).

    The profile is piecewise polynomial: one polynomial poleward of the
    albedo lines (icy surface) and another between them; at the lines the
    two are averaged.
    """

    eta_S: float
    eta_N: float
    global_mean: float
    at_eta_S: float
    at_eta_N: float
    icy_coeffs: tuple[float, ...]        # Legendre amplitudes over modes 0, 2, ...
    temperate_coeffs: tuple[float, ...]

    def evaluate(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(np.abs(y) > 1.0):
            raise ValueError("sine of latitude must lie in [-1, 1]")
        icy = np.zeros_like(y)
        temperate = np.zeros_like(y)
        for m, (ci, ct) in enumerate(zip(self.icy_coeffs, self.temperate_coeffs)):
            basis = legendre_eval(2 * m, y)
            icy = icy + ci * basis
            temperate = temperate + ct * basis
        on_line = (y == self.eta_S) | (y == self.eta_N)
        between = (y > self.eta_S) & (y < self.eta_N)
        out = np.where(on_line, 0.5 * (icy + temperate), np.where(between, temperate, icy))
        return out[()] if np.ndim(y) == 0 else out


def temperature_profile(w: float, eta_S: float, eta_N: float, params: ModelParams) -> TemperatureProfile:
    """Rebuild the temperature field from the reduced state.

    The mode-0 amplitudes are w +- z*/2 (icy/temperate); higher modes sit at
    their fast equilibria. The returned ice-line temperatures are the
    two-sided averages and the global mean is w shifted by the inter-line
    insolation deficit.
    """
    _require_line_order(eta_S, eta_N)
    d = derived_constants(params)
    s0 = params.insolation.s_coeffs[0]
    icy0 = w + 0.5 * d.z_star
    temperate0 = w - 0.5 * d.z_star
    icy = (icy0,) + d.u_star
    temperate = (temperate0,) + d.v_star
    band = insolation_integral(eta_S, eta_N, params.insolation)
    global_mean = w - 0.5 * d.L * s0 * (params.alpha2 - params.alpha1) * (1.0 - band)
    scale = d.L * (1.0 - d.alpha0)
    at_s = w + scale * (insolation(eta_S, params.insolation) - 1.0)
    at_n = w + scale * (insolation(eta_N, params.insolation) - 1.0)
    return TemperatureProfile(
        eta_S=eta_S,
        eta_N=eta_N,
        global_mean=float(global_mean),
        at_eta_S=float(at_s),
        at_eta_N=float(at_n),
        icy_coeffs=icy,
        temperate_coeffs=temperate,
    )


class SpectralState(NamedTuple):
    """State of the unreduced mode system used to verify the reduction."""

    u: tuple[float, ...]        # icy southern region amplitudes, modes 0..2M
    v: tuple[float, ...]        # temperate region amplitudes
    w_modes: tuple[float, ...]  # icy northern region amplitudes
    eta_S: float
    eta_N: float

    @classmethod
    def from_flat(cls, flat, M: int) -> "SpectralState":
        flat = np.asarray(flat, dtype=float)
        n = M + 1
        return cls(
            u=tuple(flat[:n]),
            v=tuple(flat[n : 2 * n]),
            w_modes=tuple(flat[2 * n : 3 * n]),
            eta_S=float(flat[3 * n]),
            eta_N=float(flat[3 * n + 1]),
        )

    def to_flat(self) -> np.ndarray:
        return np.array(list(self.u) + list(self.v) + list(self.w_modes) + [self.eta_S, self.eta_N])


def _segment_integral(coeffs, lo: float, hi: float) -> float:
    total = 0.0
    for m, c in enumerate(coeffs):
        total += c * (_anti_scalar(2 * m, hi) - _anti_scalar(2 * m, lo))
    return total


def _line_temperature(coeffs_a, coeffs_b, eta: float) -> float:
    total = 0.0
    for m, (ca, cb) in enumerate(zip(coeffs_a, coeffs_b)):
        total += 0.5 * (ca + cb) * _eval_scalar(2 * m, eta)
    return total


def spectral_rhs(
    state: SpectralState, t_crit_south: float, t_crit_north: float, params: ModelParams
) -> SpectralState:
    """Full 3(M+1)+2 dimensional mode system, prior to any reduction.

    Mode-0 amplitudes couple through the global mean temperature, computed
    by integrating the three polynomial pieces over their latitude bands;
    higher modes relax independently. The albedo lines respond to the
    two-sided average temperatures at the lines.
    """
    if len(state.u) != params.insolation.M + 1:
        raise ValueError("spectral state truncation does not match the insolation model")
    s = params.insolation.s_coeffs
    bc = params.B + params.C
    t_bar = 0.5 * (
        _segment_integral(state.u, -1.0, state.eta_S)
        + _segment_integral(state.v, state.eta_S, state.eta_N)
        + _segment_integral(state.w_modes, state.eta_N, 1.0)
    )

    def mode_rates(coeffs, albedo):
        rates = [
            (params.Q * s[0] * (1.0 - albedo) - params.A - bc * coeffs[0] + params.C * t_bar)
            / params.R
        ]
        for m in range(1, len(coeffs)):
            rates.append((params.Q * s[m] * (1.0 - albedo) - bc * coeffs[m]) / params.R)
        return tuple(rates)

    temp_south = _line_temperature(state.u, state.v, state.eta_S)
    temp_north = _line_temperature(state.v, state.w_modes, state.eta_N)
    return SpectralState(
        u=mode_rates(state.u, params.alpha2),
        v=mode_rates(state.v, params.alpha1),
        w_modes=mode_rates(state.w_modes, params.alpha2),
        eta_S=params.rho * (t_crit_south - temp_south),
        eta_N=params.rho * (temp_north - t_crit_north),
    )
