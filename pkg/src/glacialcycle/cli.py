"""Scenario-driven command line front end.

Subcommands: equilibria, simulate, cycle, sweep, classify. Parameters come
from a TOML config (compiled-in defaults reproduce the study regime) plus
repeatable --set key=value overrides. All numeric output is written with
full round-trip precision so regression comparisons can be exact.

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import cycle as cycle_mod
from .equilibria import find_equilibria3, lift_to_4d
from .integrate import DEFAULT_CONFIG, IntegrationError, integrate, integrate_to_event
from .model import (
    Branch,
    ConfigError,
    ModelParams,
    albedo_line_nullcline,
    boundary_margin,
    mean_temp_nullcline,
    rhs3,
    rhs4,
)
from .legendre import insolation_coeffs
from .switching import (
    classify_sigma_point,
    critical_ice_edge,
    epsilon_bound,
    mass_balance,
    tangency_separation_ok,
    tangency_w,
)

__all__ = ["ScenarioConfig", "dump_config", "load_config", "main"]

SCENARIOS = ("equilibria", "simulate", "cycle", "sweep", "classify")

TRAJECTORY_HEADER = "t,w,eta_S,eta_N,xi_N,branch"

_PARAM_FIELDS = (
    "R", "Q", "A", "B", "C", "alpha1", "alpha2", "T_cS", "T_cN_plus",
    "T_cN_minus", "rho", "a", "b", "b_minus", "b_plus", "eps",
)

_OPTION_DEFAULTS: dict[str, dict] = {
    "equilibria": {
        "t_crit_south": None,   # falls back to params.T_cS
        "t_crit_north": None,   # falls back to params.T_cN_plus
        "nullcline_samples": 101,
        "surface_samples": 33,
    },
    "simulate": {
        "mode": "flipflop",     # or "reduced"
        "initial": [0.0, -0.5, 0.5, 0.85],
        "horizon": 200.0,
        "t_crit_south": None,
        "t_crit_north": None,
    },
    "cycle": {
        "eps": None,            # falls back to params.eps
        "tol": 1e-10,
        "max_iter": 200,
        "contraction_delta": 1e-4,
        "init": None,           # falls back to the retreat-side entry point
    },
    "sweep": {
        "t_crit_n_minus": [-8.0, -5.0],
        "eps_values": [0.03],
        "tol": 1e-10,
        "max_iter": 200,
    },
    "classify": {
        "points": [],           # [w, eta_S, eta_N] or [w, eta_S, eta_N, xi_N]
    },
}


@dataclass(frozen=True)
class ScenarioConfig:
    params: ModelParams
    scenario: str
    options: dict

    def __eq__(self, other):
        return (
            isinstance(other, ScenarioConfig)
            and self.params == other.params
            and self.scenario == other.scenario
            and self.options == other.options
        )


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = dict(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key in out and isinstance(out[key], dict) and isinstance(value, dict):
            out[key] = _merge(out[key], value, where)
        else:
            out[key] = value
    return out


def _default_tree() -> dict:
    params = {name: getattr(ModelParams, "__dataclass_fields__")[name].default for name in _PARAM_FIELDS}
    params["insolation"] = {"beta": 23.5, "M": 1}
    return {"params": params, "scenario": {"name": "equilibria", "options": {}}}


def build_config(tree: dict) -> ScenarioConfig:
    """Validate a merged config tree and construct the typed configuration."""
    tree = _merge(_default_tree(), tree)
    extra = set(tree) - {"params", "scenario"}
    if extra:
        raise ConfigError(f"unknown config sections: {sorted(extra)}")
    raw_params = dict(tree["params"])
    insol = raw_params.pop("insolation", {})
    unknown = set(raw_params) - set(_PARAM_FIELDS)
    if unknown:
        raise ConfigError(f"unknown parameters: {sorted(unknown)}")
    unknown = set(insol) - {"beta", "M"}
    if unknown:
        raise ConfigError(f"unknown insolation keys: {sorted(unknown)}")
    scenario_tree = tree["scenario"]
    unknown = set(scenario_tree) - {"name", "options"}
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
    name = scenario_tree["name"]
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; choose from {SCENARIOS}")
    defaults = _OPTION_DEFAULTS[name]
    options = dict(defaults)
    for key, value in scenario_tree.get("options", {}).items():
        if key not in defaults:
            raise ConfigError(f"unknown option {key!r} for scenario {name!r}")
        options[key] = value
    try:
        model = insolation_coeffs(float(insol["beta"]), int(insol["M"]))
        params = ModelParams(**{k: float(v) for k, v in raw_params.items()}, insolation=model)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return ScenarioConfig(params=params, scenario=name, options=options)


def load_config(path: Path | None, overrides: list[str] = (), scenario: str | None = None) -> ScenarioConfig:
    """Read the TOML config (if any) and apply dotted --set overrides.

    An explicit scenario name (the CLI subcommand) takes precedence over the
    config file's choice.
    """
    tree: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                tree = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if scenario is not None:
        tree = _merge(tree, {"scenario": {"name": scenario}})
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, raw_value = item.partition("=")
        try:
            value = tomllib.loads(f"v = {raw_value}")["v"]
        except tomllib.TOMLDecodeError:
            value = raw_value
        node = {}
        leaf = node
        parts = key.strip().split(".")
        for part in parts[:-1]:
            leaf[part] = {}
            leaf = leaf[part]
        leaf[parts[-1]] = value
        tree = _merge(tree, node)
    return build_config(tree)


def _toml_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return repr(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_scalar(v) for v in value) + "]"
    raise ConfigError(f"cannot serialize config value {value!r}")


def dump_config(config: ScenarioConfig) -> str:
    """Render the fully resolved configuration as TOML."""
    lines = ["[params]"]
    for name in _PARAM_FIELDS:
        lines.append(f"{name} = {_toml_scalar(getattr(config.params, name))}")
    lines.append("")
    lines.append("[params.insolation]")
    lines.append(f"beta = {_toml_scalar(config.params.insolation.beta)}")
    lines.append(f"M = {_toml_scalar(config.params.insolation.M)}")
    lines.append("")
    lines.append("[scenario]")
    lines.append(f"name = {_toml_scalar(config.scenario)}")
    lines.append("")
    lines.append("[scenario.options]")
    for key in sorted(config.options):
        if config.options[key] is None:
            continue
        lines.append(f"{key} = {_toml_scalar(config.options[key])}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# scenario runners


def _sigma_record(t, state, params: ModelParams) -> dict:
    sigma = classify_sigma_point(state, params, event_tol=1e-9)
    return {
        "t": None if t is None else float(t),
        "label": sigma.label,
        "w": float(state[0]),
        "eta_S": float(state[1]),
        "eta_N": float(state[2]),
        "xi_N": float(state[3]),
        "margin_plus": sigma.margin_plus,
        "margin_minus": sigma.margin_minus,
    }


def _write_trajectory_csv(path: Path, rows: list[str]) -> None:
    path.write_text(TRAJECTORY_HEADER + "\n" + "".join(rows))


def _trajectory_rows(traj, t_offset: float = 0.0, branch_label: str = "") -> list[str]:
    rows = []
    for t, state in zip(traj.t, traj.states):
        xi = _fmt(state[3]) if len(state) > 3 else ""
        rows.append(
            f"{_fmt(t + t_offset)},{_fmt(state[0])},{_fmt(state[1])},{_fmt(state[2])},{xi},{branch_label}\n"
        )
    return rows


def run_equilibria(config: ScenarioConfig, out_dir: Path) -> None:
    params = config.params
    opts = config.options
    t_south = params.T_cS if opts["t_crit_south"] is None else float(opts["t_crit_south"])
    t_north = params.T_cN_plus if opts["t_crit_north"] is None else float(opts["t_crit_north"])
    reports = find_equilibria3(t_south, t_north, params)
    payload = {
        "t_crit_south": t_south,
        "t_crit_north": t_north,
        "count": len(reports),
        "equilibria": [r.to_json_dict() for r in reports],
    }
    (out_dir / "equilibria.json").write_text(json.dumps(payload, indent=2) + "\n")
    _write_nullclines_csv(out_dir / "nullclines.csv", params, t_south, t_north,
                          int(opts["nullcline_samples"]), int(opts["surface_samples"]))
    if not reports:
        raise IntegrationError("no equilibria found from any seed")


def _write_nullclines_csv(path: Path, params, t_south, t_north, n_curve, n_surface) -> None:
    lines = ["kind,eta_S,eta_N,w\n"]
    for eta_n in np.linspace(-1.0, 1.0, n_curve):
        target = albedo_line_nullcline(eta_n, t_north, params)

        def gap(eta_s, target=target):
            return albedo_line_nullcline(eta_s, t_south, params) - target

        lo = -1.0
        root = None
        scan = np.linspace(-1.0, min(eta_n, 1.0), 40)
        for hi in scan[1:]:
            if gap(lo) == 0.0:
                root = lo
                break
            if gap(lo) * gap(hi) < 0.0:
                root = brentq(gap, lo, hi, xtol=1e-13)
                break
            lo = hi
        if root is not None:
            lines.append(f"eta_nullcline,{_fmt(root)},{_fmt(eta_n)},{_fmt(target)}\n")
    grid = np.linspace(-1.0, 1.0, n_surface)
    for eta_s in grid:
        for eta_n in grid:
            if eta_s > eta_n:
                continue
            lines.append(
                f"w_surface,{_fmt(eta_s)},{_fmt(eta_n)},{_fmt(mean_temp_nullcline(eta_s, eta_n, params))}\n"
            )
    path.write_text("".join(lines))


def run_simulate(config: ScenarioConfig, out_dir: Path) -> None:
    params = config.params
    opts = config.options
    horizon = float(opts["horizon"])
    initial = [float(x) for x in opts["initial"]]
    if opts["mode"] == "reduced":
        t_south = params.T_cS if opts["t_crit_south"] is None else float(opts["t_crit_south"])
        t_north = params.T_cN_plus if opts["t_crit_north"] is None else float(opts["t_crit_north"])
        traj = integrate(
            lambda t, y: rhs3(y, t_south, t_north, params),
            initial[:3],
            (0.0, horizon),
            DEFAULT_CONFIG,
            domain_guard=boundary_margin,
        )
        _write_trajectory_csv(out_dir / "trajectory.csv", _trajectory_rows(traj))
        (out_dir / "events.json").write_text(json.dumps([]) + "\n")
        return
    if opts["mode"] != "flipflop":
        raise ConfigError(f"unknown simulate mode {opts['mode']!r}")
    if len(initial) != 4:
        raise ConfigError("flip-flop simulation needs a 4-component initial state")
    state = np.asarray(initial, dtype=float)
    balance = mass_balance(state, params)
    if abs(balance) < 1e-12:
        raise ConfigError("initial state lies on the switching manifold; perturb it off")
    branch = Branch.RETREAT if balance > 0.0 else Branch.ADVANCE
    t_now = 0.0
    rows: list[str] = []
    events: list[dict] = []
    while t_now < horizon:
        direction = "rising" if branch is Branch.ADVANCE else "falling"
        remaining = horizon - t_now
        cfg = dataclasses.replace(DEFAULT_CONFIG, max_time=remaining)
        try:
            hit = integrate_to_event(
                lambda t, y: rhs4(branch, y, params),
                lambda y: mass_balance(y, params),
                direction,
                state,
                cfg,
                domain_guard=boundary_margin,
                branch=branch,
            )
        except IntegrationError as exc:
            if "no event crossing" not in str(exc):
                raise
            tail = integrate(
                lambda t, y: rhs4(branch, y, params),
                state,
                (0.0, remaining),
                DEFAULT_CONFIG,
                domain_guard=boundary_margin,
                branch=branch,
            )
            rows += _trajectory_rows(tail, t_now, branch.value)
            break
        rows += _trajectory_rows(hit.trajectory, t_now, branch.value)
        events.append(_sigma_record(t_now + hit.t, hit.state, params))
        t_now += hit.t
        state = hit.state
        branch = Branch.RETREAT if branch is Branch.ADVANCE else Branch.ADVANCE
    _write_trajectory_csv(out_dir / "trajectory.csv", rows)
    (out_dir / "events.json").write_text(json.dumps(events, indent=2) + "\n")


def _cycle_payload(found: "cycle_mod.LimitCycle", params: ModelParams) -> dict:
    return {
        "eps": found.eps,
        "fixed_point": list(found.fixed_point),
        "crossing_minus_point": list(found.crossing_minus_point),
        "period": found.period,
        "advance_duration": found.advance_segment.duration,
        "retreat_duration": found.retreat_segment.duration,
        "closure_error": found.closure_error,
        "iterations": found.iterations,
        "contraction": found.contraction,
        "metrics": found.metrics.to_json_dict(),
        "epsilon_bound": epsilon_bound(params),
        "in_separation_regime": tangency_separation_ok(params),
    }


def run_cycle(config: ScenarioConfig, out_dir: Path) -> None:
    params = config.params
    opts = config.options
    eps = None if opts["eps"] is None else float(opts["eps"])
    init = None if opts["init"] is None else [float(x) for x in opts["init"]]
    found = cycle_mod.find_limit_cycle(
        eps,
        params,
        init=init,
        tol=float(opts["tol"]),
        max_iter=int(opts["max_iter"]),
        contraction_delta=float(opts["contraction_delta"]),
    )
    effective = params if eps is None else dataclasses.replace(params, eps=eps)
    (out_dir / "cycle.json").write_text(json.dumps(_cycle_payload(found, effective), indent=2) + "\n")
    _write_trajectory_csv(
        out_dir / "cycle_advance.csv",
        _trajectory_rows(found.advance_segment, 0.0, Branch.ADVANCE.value),
    )
    _write_trajectory_csv(
        out_dir / "cycle_retreat.csv",
        _trajectory_rows(found.retreat_segment, found.advance_segment.duration, Branch.RETREAT.value),
    )


SWEEP_HEADER = (
    "T_cN_minus,eps,converged,period,advance_fraction,amplitude_etaN,"
    "amplitude_etaS,amplitude_xiN,sync_lag,contraction,separation_ok"
)


def _sweep_row(task) -> str:
    params, t_minus, eps, tol, max_iter = task
    point_params = dataclasses.replace(params, T_cN_minus=t_minus, eps=eps)
    sep = "true" if tangency_separation_ok(point_params) else "false"
    try:
        found = cycle_mod.find_limit_cycle(None, point_params, tol=tol, max_iter=max_iter)
    except (cycle_mod.CycleError, IntegrationError):
        return f"{_fmt(t_minus)},{_fmt(eps)},false,,,,,,,,{sep}\n"
    m = found.metrics
    return (
        f"{_fmt(t_minus)},{_fmt(eps)},true,{_fmt(found.period)},{_fmt(m.advance_fraction)},"
        f"{_fmt(m.amplitude_etaN)},{_fmt(m.amplitude_etaS)},{_fmt(m.amplitude_xiN)},"
        f"{_fmt(m.sync_lag)},{_fmt(found.contraction)},{sep}\n"
    )


def run_sweep(config: ScenarioConfig, out_dir: Path, jobs: int) -> None:
    opts = config.options
    tasks = [
        (config.params, float(t_minus), float(eps), float(opts["tol"]), int(opts["max_iter"]))
        for t_minus, eps in product(opts["t_crit_n_minus"], opts["eps_values"])
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(task) for task in tasks]
    (out_dir / "sweep.csv").write_text(SWEEP_HEADER + "\n" + "".join(rows))


def run_classify(config: ScenarioConfig, out_dir: Path) -> None:
    params = config.params
    records = []
    for raw in config.options["points"]:
        values = [float(x) for x in raw]
        if len(values) == 3:
            values.append(critical_ice_edge(values[2], params))
        if len(values) != 4:
            raise ConfigError("classify points need 3 or 4 components")
        records.append(_sigma_record(None, values, params))
    lifted = {}
    for branch, t_north in ((Branch.RETREAT, params.T_cN_plus), (Branch.ADVANCE, params.T_cN_minus)):
        reports = find_equilibria3(params.T_cS, t_north, params)
        lifted[branch.value] = [lift_to_4d(branch, r, params).to_json_dict() for r in reports]
    payload = {
        "points": records,
        "equilibria": lifted,
        "epsilon_bound": epsilon_bound(params),
        "in_separation_regime": tangency_separation_ok(params),
        "tangency_w_at_zero": {
            "retreat": tangency_w(Branch.RETREAT, 0.0, params),
            "advance": tangency_w(Branch.ADVANCE, 0.0, params),
        },
    }
    (out_dir / "classify.json").write_text(json.dumps(payload, indent=2) + "\n")


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glacialcycle",
        description="Simulate the nonsmooth glacial-cycle energy balance model.",
    )
    parser.add_argument("scenario", nargs="?", choices=SCENARIOS,
                        help="scenario to run (defaults to the config file's choice)")
    parser.add_argument("--config", type=Path, help="TOML configuration file")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry (repeatable), e.g. params.Q=350")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    parser.add_argument("--dump-config", action="store_true",
                        help="print the resolved configuration and exit")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config, args.set, scenario=args.scenario)
        if args.jobs < 1:
            raise ConfigError(f"--jobs must be >= 1, got {args.jobs}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    if args.dump_config:
        sys.stdout.write(dump_config(config))
        return 0
    out_dir = args.out
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        if config.scenario == "equilibria":
            run_equilibria(config, out_dir)
        elif config.scenario == "simulate":
            run_simulate(config, out_dir)
        elif config.scenario == "cycle":
            run_cycle(config, out_dir)
        elif config.scenario == "sweep":
            run_sweep(config, out_dir, args.jobs)
        else:
            run_classify(config, out_dir)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, cycle_mod.CycleError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
