"""Adaptive Runge-Kutta integration with dense output and event location.

A thin, deterministic layer over scipy's embedded Dormand-Prince 5(4) pair:
dense output per accepted step, root-located terminal events, an optional
state-space boundary guard, and typed failures. The model is non-stiff at
the study's parameter scales (fastest relaxation rate a few per year), so an
explicit pair with tight tolerances is the right tool.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, NamedTuple, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .model import Branch

__all__ = [
    "BoundaryExitError",
    "EventHit",
    "EventNotFoundError",
    "EventRecord",
    "IntegrationError",
    "IntegratorConfig",
    "StiffnessError",
    "Trajectory",
    "integrate",
    "integrate_to_event",
]

Direction = Literal["rising", "falling", "any"]
_DIRECTION_SIGN = {"rising": 1.0, "falling": -1.0, "any": 0.0}


class IntegrationError(RuntimeError):
    """Base class for integration failures."""


class StiffnessError(IntegrationError):
    """Step size collapsed below machine resolution."""


class BoundaryExitError(IntegrationError):
    """Trajectory reached the boundary of the state space."""

    def __init__(self, t: float, state: np.ndarray):
        self.t = t
        self.state = state
        super().__init__(f"trajectory reached the state-space boundary at t = {t}")


class EventNotFoundError(IntegrationError):
    """No event crossing occurred within the integration horizon."""


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    event_tol: float = 1e-12       # admissible |event function| at a located event
    max_time: float = 5000.0       # horizon for event searches, years

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step", "event_tol", "max_time"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


DEFAULT_CONFIG = IntegratorConfig()


class EventRecord(NamedTuple):
    t: float
    state: np.ndarray
    label: Optional[str]


@dataclass
class Trajectory:
    """One smooth flow segment: accepted steps, dense interpolant, events."""

    t: np.ndarray
    states: np.ndarray                 # shape (n_samples, dim)
    events: list[EventRecord] = field(default_factory=list)
    branch: Optional[Branch] = None
    _dense: object = None              # scipy OdeSolution

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t1(self) -> float:
        return float(self.t[-1])

    @property
    def duration(self) -> float:
        return self.t1 - self.t0

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def interpolate(self, t):
        """Dense-output state at time(s) t within [t0, t1]."""
        t = np.asarray(t, dtype=float)
        if np.any(t < self.t0 - 1e-12) or np.any(t > self.t1 + 1e-12):
            raise ValueError("interpolation time outside the integrated span")
        out = self._dense(t)
        return out if np.ndim(t) == 0 else out.T

    def sample(self, n: int):
        """Uniform resampling: returns (t_grid, states) with n points."""
        grid = np.linspace(self.t0, self.t1, n)
        return grid, self.interpolate(grid)


class EventHit(NamedTuple):
    t: float
    state: np.ndarray
    trajectory: Trajectory


def _guard_event(domain_guard):
    def guard(t, y):
        return domain_guard(y)

    guard.terminal = True
    guard.direction = -1.0
    return guard


def _check_initial(state0, domain_guard) -> np.ndarray:
    state0 = np.asarray(state0, dtype=float)
    if not np.all(np.isfinite(state0)):
        raise ValueError(f"initial state must be finite, got {state0}")
    if domain_guard is not None and domain_guard(state0) <= 0.0:
        raise BoundaryExitError(0.0, state0)
    return state0


def integrate(
    rhs: Callable,
    state0,
    t_span: tuple[float, float],
    config: IntegratorConfig = DEFAULT_CONFIG,
    *,
    domain_guard: Callable | None = None,
    branch: Branch | None = None,
) -> Trajectory:
    """Integrate dy/dt = rhs(t, y) over t_span.

    Raises StiffnessError on step-size underflow and BoundaryExitError if
    the optional domain guard (positive inside the state space) hits zero.
    """
    state0 = _check_initial(state0, domain_guard)
    if not t_span[1] > t_span[0]:
        raise ValueError(f"degenerate time span {t_span}")
    events = [_guard_event(domain_guard)] if domain_guard is not None else []
    sol = solve_ivp(
        rhs,
        t_span,
        state0,
        method="RK45",
        rtol=config.rel_tol,
        atol=config.abs_tol,
        max_step=config.max_step,
        dense_output=True,
        events=events,
    )
    if sol.status == -1:
        raise StiffnessError(sol.message)
    if sol.status == 1:  # only the guard is terminal here
        raise BoundaryExitError(float(sol.t[-1]), sol.y[:, -1])
    return Trajectory(t=sol.t, states=sol.y.T, branch=branch, _dense=sol.sol)


def integrate_to_event(
    rhs: Callable,
    event_fn: Callable,
    direction: Direction,
    state0,
    config: IntegratorConfig = DEFAULT_CONFIG,
    *,
    domain_guard: Callable | None = None,
    label: Optional[str] = None,
    branch: Branch | None = None,
) -> EventHit:
    """Integrate until event_fn(state) crosses zero in the given direction.

    The crossing is bracketed on the dense output and refined until the
    event residual is below config.event_tol. A crossing already satisfied
    at t = 0 in the wrong direction is ignored. Raises EventNotFoundError
    if the horizon config.max_time passes without a crossing.
    """
    if direction not in _DIRECTION_SIGN:
        raise ValueError(f"direction must be one of {sorted(_DIRECTION_SIGN)}, got {direction!r}")
    state0 = _check_initial(state0, domain_guard)

    def target(t, y):
        return event_fn(y)

    target.terminal = True
    target.direction = _DIRECTION_SIGN[direction]
    events = [target]
    if domain_guard is not None:
        events.append(_guard_event(domain_guard))
    sol = solve_ivp(
        rhs,
        (0.0, config.max_time),
        state0,
        method="RK45",
        rtol=config.rel_tol,
        atol=config.abs_tol,
        max_step=config.max_step,
        dense_output=True,
        events=events,
    )
    if sol.status == -1:
        raise StiffnessError(sol.message)
    if sol.status == 0 or sol.t_events[0].size == 0:
        if domain_guard is not None and sol.t_events[1].size > 0:
            raise BoundaryExitError(float(sol.t_events[1][0]), sol.y_events[1][0])
        raise EventNotFoundError(
            f"no event crossing within horizon of {config.max_time} time units"
        )
    t_hit = float(sol.t_events[0][0])
    state_hit = _refine_event(sol.sol, event_fn, t_hit, config.event_tol)
    trajectory = Trajectory(
        t=sol.t,
        states=sol.y.T,
        events=[EventRecord(t=t_hit, state=state_hit, label=label)],
        branch=branch,
        _dense=sol.sol,
    )
    return EventHit(t=t_hit, state=state_hit, trajectory=trajectory)


def _refine_event(dense, event_fn, t_hit: float, event_tol: float) -> np.ndarray:
    """Polish scipy's located root on the dense output to the residual tol."""
    state = dense(t_hit)
    residual = event_fn(state)
    if abs(residual) < event_tol:
        return state
    # Bisect a widening bracket around t_hit; the dense output is smooth.
    width = max(1e-13, 1e-9 * abs(t_hit))
    lo, hi = t_hit - width, t_hit + width
    for _ in range(60):
        if event_fn(dense(lo)) * event_fn(dense(hi)) <= 0.0:
            break
        width *= 4.0
        lo, hi = t_hit - width, t_hit + width
    else:
        raise IntegrationError("failed to bracket the event on the dense output")
    f_lo = event_fn(dense(lo))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = event_fn(dense(mid))
        if abs(f_mid) < event_tol:
            return dense(mid)
        if f_lo * f_mid <= 0.0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    raise IntegrationError(
        f"event residual did not reach {event_tol} under bisection refinement"
    )
