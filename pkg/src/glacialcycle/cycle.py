"""The glacial limit cycle: half-return maps, fixed point, and metrics.

Trajectories alternate between the advancing and retreating regimes,
crossing the switching manifold transversally. Composing the two half maps
gives a return map on the manifold whose fixed point is found by plain
Picard iteration; the map is strongly contracting, so the iteration doubles
as a constructive convergence check.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from .equilibria import find_equilibria3
from .integrate import (
    DEFAULT_CONFIG,
    EventNotFoundError,
    IntegratorConfig,
    Trajectory,
    integrate_to_event,
)
from .model import (
    Branch,
    ClimateState4,
    ModelParams,
    boundary_margin,
    rhs4,
)
from .switching import classify_sigma_point, critical_ice_edge, mass_balance

__all__ = [
    "CycleError",
    "CycleMetrics",
    "HalfMapResult",
    "LimitCycle",
    "R_points",
    "contraction_estimate",
    "cycle_metrics",
    "find_limit_cycle",
    "half_map",
    "return_map",
]


class CycleError(RuntimeError):
    """Raised when the cycle construction fails."""


# Crossing region each half map must start from, and must land in.
_START_REGION = {Branch.ADVANCE: "crossing_plus", Branch.RETREAT: "crossing_minus"}
_TARGET_REGION = {Branch.ADVANCE: "crossing_minus", Branch.RETREAT: "crossing_plus"}
_EXIT_DIRECTION = {Branch.ADVANCE: "rising", Branch.RETREAT: "falling"}


class HalfMapResult(NamedTuple):
    point: ClimateState4
    duration: float
    trajectory: Trajectory


@dataclass(frozen=True)
class CycleMetrics:
    amplitude_etaN: float
    amplitude_etaS: float
    amplitude_xiN: float
    advance_fraction: float
    sync_lag: float      # |lag| of eta_N against -eta_S, as a fraction of the period

    def to_json_dict(self) -> dict:
        return {
            "amplitude_etaN": self.amplitude_etaN,
            "amplitude_etaS": self.amplitude_etaS,
            "amplitude_xiN": self.amplitude_xiN,
            "advance_fraction": self.advance_fraction,
            "sync_lag": self.sync_lag,
        }


@dataclass
class LimitCycle:
    fixed_point: ClimateState4          # on the manifold, start of the advance leg
    crossing_minus_point: ClimateState4  # where the advance leg exits
    advance_segment: Trajectory
    retreat_segment: Trajectory
    period: float
    contraction: Optional[float]
    metrics: CycleMetrics
    closure_error: float
    iterations: int
    eps: float


def _with_eps(params: ModelParams, eps: Optional[float]) -> ModelParams:
    if eps is None or eps == params.eps:
        return params
    return replace(params, eps=eps)


def R_points(params: ModelParams) -> tuple[ClimateState4, ClimateState4]:
    """Stable reduced-flow equilibria of both regimes, lifted onto the manifold.

    These are the points where the slow ice-edge drift carries a relaxed
    trajectory into the manifold; the cycle's crossings land near them.
    """
    points = []
    for branch, t_crit_n in (
        (Branch.RETREAT, params.T_cN_plus),
        (Branch.ADVANCE, params.T_cN_minus),
    ):
        stable = [
            r for r in find_equilibria3(params.T_cS, t_crit_n, params)
            if r.stability == "stable node"
        ]
        if len(stable) != 1:
            raise CycleError(
                f"expected one stable {branch.value}-flow equilibrium, found {len(stable)}"
            )
        w, eta_S, eta_N = stable[0].point
        points.append(ClimateState4(w, eta_S, eta_N, critical_ice_edge(eta_N, params)))
    return points[0], points[1]


def half_map(
    branch: Branch,
    state,
    eps: Optional[float],
    params: ModelParams,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> HalfMapResult:
    """Flow one regime from its entry crossing region back to the manifold.

    The advance map carries a point of the plus crossing region to the minus
    one; the retreat map does the opposite. Raises CycleError if the start
    lies in the wrong region, if no return crossing occurs within the
    horizon, or if the exit is not transversal.
    """
    p = _with_eps(params, eps)
    start = np.asarray(state, dtype=float)
    start_class = classify_sigma_point(start, p, event_tol=10 * config.event_tol)
    if start_class.label != _START_REGION[branch]:
        raise CycleError(
            f"{branch.value} half map requires a start in {_START_REGION[branch]}, "
            f"got {start_class.label}"
        )
    try:
        hit = integrate_to_event(
            lambda t, y: rhs4(branch, y, p),
            lambda y: mass_balance(y, p),
            _EXIT_DIRECTION[branch],
            start,
            config,
            domain_guard=boundary_margin,
            label=None,
            branch=branch,
        )
    except EventNotFoundError as exc:
        raise CycleError(
            f"{branch.value} flow found no return crossing within {config.max_time} years; "
            "the virtual equilibrium may not attract this start"
        ) from exc
    exit_class = classify_sigma_point(hit.state, p, event_tol=10 * config.event_tol)
    if exit_class.label != _TARGET_REGION[branch]:
        raise CycleError(
            f"{branch.value} half map exited the manifold in {exit_class.label}, "
            f"expected {_TARGET_REGION[branch]}"
        )
    return HalfMapResult(
        point=ClimateState4(*map(float, hit.state)),
        duration=hit.t,
        trajectory=hit.trajectory,
    )


def return_map(
    state,
    eps: Optional[float],
    params: ModelParams,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> ClimateState4:
    """Composite of the advance and retreat half maps on the plus region."""
    advance = half_map(Branch.ADVANCE, state, eps, params, config)
    retreat = half_map(Branch.RETREAT, advance.point, eps, params, config)
    return retreat.point


def find_limit_cycle(
    eps: Optional[float],
    params: ModelParams,
    init=None,
    tol: float = 1e-10,
    max_iter: int = 200,
    config: IntegratorConfig = DEFAULT_CONFIG,
    *,
    with_contraction: bool = True,
    contraction_delta: float = 1e-4,
) -> LimitCycle:
    """Converge the return map to its fixed point and assemble the cycle.

    Plain Picard iteration suffices: the return map is a strong contraction,
    so the iteration itself certifies attraction. After convergence one more
    full revolution from the fixed point supplies the stored segments and
    the closure error.
    """
    p = _with_eps(params, eps)
    if init is None:
        init = R_points(p)[0]
    v = np.asarray(init, dtype=float)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        v_next = np.asarray(return_map(v, None, p, config), dtype=float)
        diff = float(np.max(np.abs(v_next - v)))
        v = v_next
        if diff < tol:
            break
    else:
        raise CycleError(f"return map did not converge within {max_iter} iterations")
    advance = half_map(Branch.ADVANCE, v, None, p, config)
    retreat = half_map(Branch.RETREAT, advance.point, None, p, config)
    closure = float(np.max(np.abs(np.asarray(retreat.point) - v)))
    fixed_point = ClimateState4(*map(float, v))
    period = advance.duration + retreat.duration
    cycle = LimitCycle(
        fixed_point=fixed_point,
        crossing_minus_point=advance.point,
        advance_segment=advance.trajectory,
        retreat_segment=retreat.trajectory,
        period=period,
        contraction=None,
        metrics=None,
        closure_error=closure,
        iterations=iterations,
        eps=p.eps,
    )
    cycle.metrics = cycle_metrics(cycle)
    if with_contraction:
        cycle.contraction = contraction_estimate(
            fixed_point, None, p, delta=contraction_delta, config=config
        )
    return cycle


def contraction_estimate(
    v_star,
    eps: Optional[float],
    params: ModelParams,
    delta: float = 1e-4,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> float:
    """Finite-difference bound on the return map's contraction factor.

    Perturbs the fixed point along manifold-tangent directions (the ice
    edge stays slaved to the albedo line) and measures the image spread. If
    a perturbed point leaves the crossing region the step is halved.
    """
    p = _with_eps(params, eps)
    v0 = np.asarray(v_star, dtype=float)
    base = np.asarray(return_map(v0, None, p, config), dtype=float)
    slope = 1.0 + p.a / p.b
    directions = [
        np.array([1.0, 0.0, 0.0, 0.0]),
        np.array([0.0, 1.0, 0.0, 0.0]),
        np.array([0.0, 0.0, 1.0, slope]) / np.hypot(1.0, slope),
    ]
    worst = 0.0
    for direction in directions:
        step = delta
        while True:
            candidate = v0 + step * direction
            try:
                label = classify_sigma_point(candidate, p, event_tol=10 * config.event_tol).label
            except ValueError:
                label = "off-manifold"
            if label == "crossing_plus":
                break
            step *= 0.5
            if step < 1e-10:
                raise CycleError(
                    "could not keep the perturbed point inside the crossing region"
                )
        image = np.asarray(return_map(candidate, None, p, config), dtype=float)
        worst = max(worst, float(np.linalg.norm(image - base)) / step)
    return worst


def cycle_metrics(cycle: LimitCycle, n_samples: int = 4096) -> CycleMetrics:
    """Peak-to-peak amplitudes, leg split, and hemispheric phase lag.

    The cycle is resampled on a uniform grid (>= 2000 points per period);
    the lag maximizes the circular cross-correlation of the northern albedo
    line with the mirrored southern one.
    """
    period = cycle.period
    t_adv = cycle.advance_segment.duration
    grid = np.linspace(0.0, period, n_samples, endpoint=False)
    states = np.empty((n_samples, 4))
    on_advance = grid < t_adv
    if np.any(on_advance):
        states[on_advance] = cycle.advance_segment.interpolate(
            cycle.advance_segment.t0 + grid[on_advance]
        )
    if np.any(~on_advance):
        states[~on_advance] = cycle.retreat_segment.interpolate(
            cycle.retreat_segment.t0 + grid[~on_advance] - t_adv
        )
    eta_S, eta_N, xi_N = states[:, 1], states[:, 2], states[:, 3]
    north = eta_N - eta_N.mean()
    south_mirror = -eta_S - (-eta_S).mean()
    if np.ptp(north) == 0.0 or np.ptp(south_mirror) == 0.0:
        lag_fraction = 0.0
    else:
        corr = np.fft.irfft(
            np.fft.rfft(north) * np.conj(np.fft.rfft(south_mirror)), n=n_samples
        )
        k = int(np.argmax(corr))
        if k > n_samples // 2:
            k -= n_samples
        lag_fraction = abs(k) / n_samples
    return CycleMetrics(
        amplitude_etaN=float(np.ptp(eta_N)),
        amplitude_etaS=float(np.ptp(eta_S)),
        amplitude_xiN=float(np.ptp(xi_N)),
        advance_fraction=float(t_adv / period),
        sync_lag=float(lag_fraction),
    )
