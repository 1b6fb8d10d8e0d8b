"""Even Legendre polynomials and the mean annual insolation distribution.

The latitudinal distribution of mean annual insolation on a fast-rotating
planet with a circular orbit depends only on the sine of latitude y and the
axial tilt. Truncating its expansion in even Legendre polynomials gives the
dimensionless shape function used by the energy balance model:

    s(y) = sum_m s_{2m} p_{2m}(y),    s_0 = 1,

where the coefficients are obtained by Gauss-Legendre projection of the
exact (daily- and annually-averaged) distribution.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "InsolationModel",
    "insolation",
    "insolation_coeffs",
    "insolation_derivative",
    "insolation_integral",
    "legendre_antiderivative",
    "legendre_deriv",
    "legendre_eval",
]

# Nodes for the quadratures: 64 in y is exact for polynomial integrands of
# degree <= 127; 256 in orbital angle resolves the polar-circle kinks of the
# insolation integrand to ~1e-7, far below the model's needs.
_N_NODES_Y = 64
_N_NODES_ORBIT = 256

# The projection coefficient a_2 of the annual-mean distribution is
# tilt-independent; a drift between obliquities flags a quadrature bug.
_COEFF_CONSISTENCY_TOL = 1e-4


def _check_even_order(m: int) -> None:
    if m < 0 or m % 2 != 0:
        raise ValueError(f"Legendre order must be even and nonnegative, got {m}")


def _eval_scalar(m: int, y: float) -> float:
    """Unchecked float recurrence; valid for any real y (integrator stages
    may probe marginally outside [-1, 1])."""
    p_prev, p_cur = 1.0, y
    if m == 0:
        return p_prev
    for k in range(1, m):
        p_prev, p_cur = p_cur, ((2 * k + 1) * y * p_cur - k * p_prev) / (k + 1)
    return p_cur


def _anti_scalar(m: int, y: float) -> float:
    """Unchecked float antiderivative matching legendre_antiderivative."""
    if m == 0:
        return y
    return (_eval_scalar(m + 1, y) - _eval_scalar(m - 1, y)) / (2 * m + 1)


def _deriv_scalar(m: int, y: float) -> float:
    """Unchecked float derivative matching legendre_deriv."""
    total = 0.0
    for k in range(2, m + 1, 2):
        total += (2 * k - 1) * _eval_scalar(k - 1, y)
    return total


def legendre_eval(m: int, y):
    """Evaluate the Legendre polynomial p_m(y) by the three-term recurrence.

    Only even orders are admitted; y must lie in [-1, 1]. Accepts scalar or
    ndarray y.
    """
    _check_even_order(m)
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) > 1.0):
        raise ValueError("argument of legendre_eval must lie in [-1, 1]")
    return _legendre_recurrence(m, y)


def _legendre_recurrence(m: int, y):
    p_prev = np.ones_like(y)
    if m == 0:
        return p_prev[()] if np.ndim(y) == 0 else p_prev
    p_cur = y
    for k in range(1, m):
        p_prev, p_cur = p_cur, ((2 * k + 1) * y * p_cur - k * p_prev) / (k + 1)
    return p_cur


def legendre_antiderivative(m: int, y):
    """Antiderivative P_m of p_m with P_m(0) = 0 for m >= 2 and P_0(y) = y.

    For m >= 2 the classical identity gives
    P_m(y) = (p_{m+1}(y) - p_{m-1}(y)) / (2m + 1), which vanishes at y = +-1,
    so even polynomials of positive order integrate to zero over [-1, 1].
    """
    _check_even_order(m)
    y = np.asarray(y, dtype=float)
    if m == 0:
        return y[()] if np.ndim(y) == 0 else y
    upper = _legendre_recurrence(m + 1, y)
    lower = _legendre_recurrence(m - 1, y)
    return (upper - lower) / (2 * m + 1)


def legendre_deriv(m: int, y):
    """Derivative p_m'(y), via p'_m = p'_{m-2} + (2m - 1) p_{m-1}.

    The upward recurrence avoids the (1 - y^2) division that is singular at
    the poles.
    """
    _check_even_order(m)
    y = np.asarray(y, dtype=float)
    deriv = np.zeros_like(y)
    for k in range(2, m + 1, 2):
        deriv = deriv + (2 * k - 1) * _legendre_recurrence(k - 1, y)
    return deriv[()] if np.ndim(y) == 0 else deriv


@dataclass(frozen=True)
class InsolationModel:
    """Truncated Legendre expansion of the mean annual insolation shape.

    s_coeffs holds (s_0, s_2, ..., s_{2M}) with s_0 = 1 so that the global
    mean of s over [-1, 1] is exactly 1.
    """

    M: int
    beta: float  # obliquity, degrees
    s_coeffs: tuple[float, ...]

    def __post_init__(self):
        if self.M < 1:
            raise ValueError(f"truncation order must be >= 1, got {self.M}")
        if len(self.s_coeffs) != self.M + 1:
            raise ValueError("s_coeffs must hold one coefficient per even mode")


def _daily_mean_factor(y, sin_decl):
    """Day-averaged max(cos(zenith angle), 0) at sine-latitude y.

    With A = y sin(decl) and B = sqrt((1-y^2)(1-sin^2 decl)), polar day gives
    A, polar night 0, and otherwise (A*H + B*sin H)/pi with sunrise hour
    angle H = arccos(-A/B).
    """
    a_term = y * sin_decl
    b_term = np.sqrt(np.maximum((1.0 - y**2) * (1.0 - sin_decl**2), 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.clip(np.where(b_term > 0.0, -a_term / np.where(b_term > 0.0, b_term, 1.0), 0.0), -1.0, 1.0)
    hour = np.arccos(ratio)
    interior = (a_term * hour + b_term * np.sin(hour)) / np.pi
    return np.where(a_term >= b_term, a_term, np.where(a_term <= -b_term, 0.0, interior))


def _annual_mean_distribution(y, beta_rad: float) -> np.ndarray:
    """Mean annual insolation shape, normalized to global mean 1.

    Averages the daily-mean factor over a circular orbit; the solar
    declination satisfies sin(decl) = sin(beta) sin(orbital angle). The
    sphere average of the unnormalized factor is 1/4, hence the factor 4.
    """
    nodes, weights = np.polynomial.legendre.leggauss(_N_NODES_ORBIT)
    angle = 0.25 * np.pi * (nodes + 1.0)  # quarter period suffices by symmetry
    w = 0.25 * np.pi * weights
    sin_decl = np.sin(beta_rad) * np.sin(angle)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    daily = 0.5 * (
        _daily_mean_factor(y[:, None], sin_decl[None, :])
        + _daily_mean_factor(y[:, None], -sin_decl[None, :])
    )
    return 4.0 * (daily @ w) / (0.5 * np.pi)


def _project_even_modes(beta_deg: float, n_modes: int) -> np.ndarray:
    nodes, weights = np.polynomial.legendre.leggauss(_N_NODES_Y)
    shape = _annual_mean_distribution(nodes, np.deg2rad(beta_deg))
    coeffs = np.empty(n_modes + 1)
    for m in range(n_modes + 1):
        basis = _legendre_recurrence(2 * m, nodes)
        coeffs[m] = (4 * m + 1) / 2.0 * np.sum(weights * shape * basis)
    return coeffs


@lru_cache(maxsize=None)
def insolation_coeffs(beta: float, M: int = 1) -> InsolationModel:
    """Project the annual-mean insolation distribution onto even modes.

    Parameters
    ----------
    beta : obliquity in degrees, 0 <= beta < 90.
    M : truncation order; the expansion keeps modes 0, 2, ..., 2M.

    The raw projection is renormalized so s_0 = 1 exactly. Two self-checks
    guard the quadrature: the raw s_0 must already be 1 to ~1e-6, and the
    tilt-independent ratio coefficient of the quadratic mode must agree with
    its zero-obliquity value.
    """
    if not 0.0 <= beta < 90.0:
        raise ValueError(f"obliquity must lie in [0, 90) degrees, got {beta}")
    if M < 1:
        raise ValueError(f"truncation order must be >= 1, got {M}")
    raw = _project_even_modes(beta, M)
    # The zero-tilt distribution has sqrt(1 - y^2) endpoint behavior, which
    # caps the 64-node projection accuracy near 2e-6.
    if abs(raw[0] - 1.0) > 1e-5:
        raise RuntimeError(
            f"insolation projection lost normalization: s_0 = {raw[0]!r}"
        )
    coeffs = raw / raw[0]
    # a_2 = s_2 / p_2(cos beta) does not depend on the tilt; compare against
    # the beta = 0 projection where p_2(cos 0) = 1.
    ref = _project_even_modes(0.0, 1)
    a2_ref = ref[1] / ref[0]
    p2_cos = _legendre_recurrence(2, float(np.cos(np.deg2rad(beta))))
    if abs(coeffs[1] - a2_ref * p2_cos) > _COEFF_CONSISTENCY_TOL:
        raise RuntimeError(
            "insolation projection inconsistent across obliquities: "
            f"s_2 = {coeffs[1]!r}, expected {a2_ref * p2_cos!r}"
        )
    model = InsolationModel(M=M, beta=beta, s_coeffs=tuple(float(c) for c in coeffs))
    grid = np.linspace(-1.0, 1.0, 201)
    if np.any(insolation(grid, model) <= 0.0):
        raise RuntimeError(f"truncated insolation is not positive at beta = {beta}")
    return model


def insolation(y, model: InsolationModel):
    """Evaluate s(y) = sum_m s_{2m} p_{2m}(y)."""
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) > 1.0):
        raise ValueError("sine of latitude must lie in [-1, 1]")
    total = np.zeros_like(y)
    for m, coeff in enumerate(model.s_coeffs):
        total = total + coeff * _legendre_recurrence(2 * m, y)
    return total[()] if np.ndim(y) == 0 else total


def insolation_derivative(y, model: InsolationModel):
    """Evaluate s'(y)."""
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) > 1.0):
        raise ValueError("sine of latitude must lie in [-1, 1]")
    total = np.zeros_like(y)
    for m, coeff in enumerate(model.s_coeffs):
        if m == 0:
            continue
        total = total + coeff * legendre_deriv(2 * m, y)
    return total[()] if np.ndim(y) == 0 else total


def insolation_integral(eta_S: float, eta_N: float, model: InsolationModel) -> float:
    """Integral of s over [eta_S, eta_N] from the exact antiderivative."""
    if eta_S > eta_N:
        raise ValueError(f"integration bounds out of order: {eta_S} > {eta_N}")
    if eta_S < -1.0 or eta_N > 1.0:
        raise ValueError("integration bounds must lie in [-1, 1]")
    total = 0.0
    for m, coeff in enumerate(model.s_coeffs):
        total += coeff * (
            legendre_antiderivative(2 * m, eta_N) - legendre_antiderivative(2 * m, eta_S)
        )
    return float(total)
