"""End-to-end tests of the command line interface and its file formats."""
import json
import subprocess
import sys

import pytest

from glacialcycle.cli import (
    SWEEP_HEADER,
    TRAJECTORY_HEADER,
    ScenarioConfig,
    build_config,
    dump_config,
    load_config,
    main,
)


def run_cli(*argv):
    return main(list(argv))


# ── Configuration handling ──────────────────────────────────────

class TestConfig:

    def test_defaults(self):
        config = load_config(None)
        assert config.scenario == "equilibria"
        assert config.params.Q == 343.0
        assert config.params.insolation.beta == 23.5

    def test_set_overrides(self):
        config = load_config(None, ["params.Q=350", "scenario.name=cycle", "scenario.options.eps=0.1"])
        assert config.params.Q == 350.0
        assert config.scenario == "cycle"
        assert config.options["eps"] == 0.1

    def test_subcommand_overrides_file_scenario(self, tmp_path):
        path = tmp_path / "conf.toml"
        path.write_text('[scenario]\nname = "cycle"\n')
        config = load_config(path, [], scenario="sweep")
        assert config.scenario == "sweep"

    def test_round_trip(self, tmp_path):
        config = load_config(None, ["params.eps=0.07", "scenario.name=sweep",
                                    "scenario.options.eps_values=[0.01, 0.2]"])
        path = tmp_path / "dumped.toml"
        path.write_text(dump_config(config))
        assert load_config(path) == config

    def test_rejects_unknown_parameter(self):
        with pytest.raises(Exception, match="unknown"):
            load_config(None, ["params.zeta=1.0"])

    def test_rejects_unknown_option(self):
        with pytest.raises(Exception, match="unknown option"):
            load_config(None, ["scenario.options.bogus=1"])

    def test_rejects_invalid_albedo_order(self):
        with pytest.raises(Exception, match="poleward"):
            load_config(None, ["params.alpha1=0.7"])

    def test_insolation_override_rebuilds_model(self):
        config = load_config(None, ["params.insolation.beta=0.0"])
        assert config.params.insolation.beta == 0.0
        assert config.params.insolation.s_coeffs[1] == pytest.approx(-0.625, abs=2e-5)


# ── Exit codes ──────────────────────────────────────────────────

class TestExitCodes:

    def test_config_error_is_2(self, tmp_path, capsys):
        code = run_cli("equilibria", "--set", "params.alpha1=0.9", "--out", str(tmp_path))
        assert code == 2
        assert "configuration error" in capsys.readouterr().err

    def test_solver_error_is_3(self, tmp_path, capsys):
        code = run_cli(
            "cycle", "--set", "scenario.options.max_iter=1", "--set", "scenario.options.tol=0.0",
            "--out", str(tmp_path),
        )
        assert code == 3
        assert "solver error" in capsys.readouterr().err

    def test_dump_config_exits_clean(self, capsys):
        assert run_cli("cycle", "--dump-config") == 0
        out = capsys.readouterr().out
        assert "[params]" in out and 'name = "cycle"' in out

    def test_console_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "glacialcycle.cli", "equilibria", "--out", str(tmp_path)],
            capture_output=True,
        )
        assert proc.returncode == 0
        assert (tmp_path / "equilibria.json").exists()


# ── Scenario outputs ────────────────────────────────────────────

class TestEquilibriaScenario:

    def test_default_run_reports_paper_points(self, tmp_path):
        assert run_cli("equilibria", "--out", str(tmp_path)) == 0
        payload = json.loads((tmp_path / "equilibria.json").read_text())
        assert payload["count"] == 2
        points = sorted(r["point"] for r in payload["equilibria"])
        assert points[0] == pytest.approx([-17.118, -0.249, 0.249], abs=5e-3)
        assert points[1] == pytest.approx([5.188, -0.955, 0.955], abs=5e-3)

    def test_asymmetric_run(self, tmp_path):
        assert run_cli("equilibria", "--set", "scenario.options.t_crit_north=-5",
                       "--out", str(tmp_path)) == 0
        payload = json.loads((tmp_path / "equilibria.json").read_text())
        stable = [r for r in payload["equilibria"] if r["stability"] == "stable node"][0]
        assert stable["point"][1] == pytest.approx(-0.907, abs=5e-3)
        assert stable["point"][2] == pytest.approx(0.795, abs=5e-3)

    def test_nullclines_csv_schema(self, tmp_path):
        run_cli("equilibria", "--out", str(tmp_path))
        lines = (tmp_path / "nullclines.csv").read_text().splitlines()
        assert lines[0] == "kind,eta_S,eta_N,w"
        kinds = {line.split(",")[0] for line in lines[1:]}
        assert kinds == {"eta_nullcline", "w_surface"}


class TestSimulateScenario:

    def test_reduced_run_reaches_small_caps(self, tmp_path):
        assert run_cli(
            "simulate", "--set", "scenario.options.mode=reduced",
            "--set", "scenario.options.initial=[0.0, -0.5, 0.5]",
            "--set", "scenario.options.horizon=100.0",
            "--out", str(tmp_path),
        ) == 0
        lines = (tmp_path / "trajectory.csv").read_text().splitlines()
        assert lines[0] == TRAJECTORY_HEADER
        last = lines[-1].split(",")
        assert float(last[2]) == pytest.approx(-0.955, abs=5e-3)
        assert float(last[3]) == pytest.approx(0.955, abs=5e-3)
        assert last[4] == "" and last[5] == ""

    def test_warmer_critical_temp_means_larger_cap(self, tmp_path):
        finals = {}
        for t_crit in (-5.0, -2.0):
            out = tmp_path / f"t{t_crit}"
            out.mkdir()
            assert run_cli(
                "simulate", "--set", "scenario.options.mode=reduced",
                "--set", "scenario.options.initial=[0.0, -0.5, 0.5]",
                "--set", f"scenario.options.t_crit_north={t_crit}",
                "--set", "scenario.options.horizon=150.0",
                "--out", str(out),
            ) == 0
            last = (out / "trajectory.csv").read_text().splitlines()[-1].split(",")
            finals[t_crit] = float(last[3])
        assert finals[-2.0] < finals[-5.0]

    def test_flipflop_alternates_branches_with_crossing_events(self, tmp_path):
        assert run_cli(
            "simulate", "--set", "scenario.options.horizon=150.0", "--out", str(tmp_path)
        ) == 0
        rows = (tmp_path / "trajectory.csv").read_text().splitlines()[1:]
        labels = []
        for row in rows:
            label = row.split(",")[5]
            if not labels or labels[-1] != label:
                labels.append(label)
        assert len(labels) >= 3  # at least one full alternation
        assert all(a != b for a, b in zip(labels, labels[1:]))
        events = json.loads((tmp_path / "events.json").read_text())
        assert len(events) == len(labels) - 1
        assert all(e["label"].startswith("crossing_") for e in events)
        assert all(abs(e["margin_plus"]) > 0 for e in events)

    def test_start_on_manifold_rejected(self, tmp_path, capsys):
        code = run_cli(
            "simulate", "--set", "scenario.options.initial=[0.0, -0.5, 0.5, 0.2]",
            "--out", str(tmp_path),
        )
        assert code == 2


@pytest.fixture(scope="module")
def cycle_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("cycle")
    assert run_cli("cycle", "--out", str(out)) == 0
    return out


class TestCycleScenario:

    def test_summary_payload(self, cycle_out):
        payload = json.loads((cycle_out / "cycle.json").read_text())
        assert payload["closure_error"] < 1e-8
        assert payload["contraction"] < 1.0
        assert payload["metrics"]["advance_fraction"] > 0.5
        assert payload["in_separation_regime"] is True
        assert payload["epsilon_bound"] == pytest.approx(0.5714, abs=1e-4)

    def test_segment_csvs(self, cycle_out):
        adv = (cycle_out / "cycle_advance.csv").read_text().splitlines()
        ret = (cycle_out / "cycle_retreat.csv").read_text().splitlines()
        assert adv[0] == TRAJECTORY_HEADER
        assert adv[1].split(",")[5] == "advance"
        assert ret[1].split(",")[5] == "retreat"
        # retreat leg's clock continues the advance leg's
        assert float(ret[1].split(",")[0]) == pytest.approx(float(adv[-1].split(",")[0]), abs=1e-9)

    def test_deterministic_output(self, cycle_out, tmp_path):
        assert run_cli("cycle", "--out", str(tmp_path)) == 0
        for name in ("cycle.json", "cycle_advance.csv", "cycle_retreat.csv"):
            assert (tmp_path / name).read_bytes() == (cycle_out / name).read_bytes()


class TestSweepScenario:

    def test_default_sweep_amplitude_ordering(self, tmp_path):
        assert run_cli("sweep", "--out", str(tmp_path)) == 0
        lines = (tmp_path / "sweep.csv").read_text().splitlines()
        assert lines[0] == SWEEP_HEADER
        rows = {float(r.split(",")[0]): r.split(",") for r in lines[1:]}
        assert set(rows) == {-8.0, -5.0}
        assert all(r[2] == "true" for r in rows.values())
        amp = {k: float(r[5]) for k, r in rows.items()}
        assert amp[-5.0] > amp[-8.0]

    def test_empty_grid(self, tmp_path):
        assert run_cli("sweep", "--set", "scenario.options.t_crit_n_minus=[]",
                       "--out", str(tmp_path)) == 0
        assert (tmp_path / "sweep.csv").read_text() == SWEEP_HEADER + "\n"

    def test_parallel_matches_serial(self, tmp_path):
        serial = tmp_path / "serial"
        parallel = tmp_path / "parallel"
        serial.mkdir(), parallel.mkdir()
        args = ("sweep", "--set", "scenario.options.eps_values=[0.3]")
        assert run_cli(*args, "--out", str(serial), "--jobs", "1") == 0
        assert run_cli(*args, "--out", str(parallel), "--jobs", "2") == 0
        assert (serial / "sweep.csv").read_bytes() == (parallel / "sweep.csv").read_bytes()


class TestClassifyScenario:

    def test_equilibria_are_virtual_and_points_labeled(self, tmp_path):
        assert run_cli(
            "classify",
            "--set", "scenario.options.points=[[5.1877698, -0.9546971, 0.9546971]]",
            "--out", str(tmp_path),
        ) == 0
        payload = json.loads((tmp_path / "classify.json").read_text())
        assert payload["points"][0]["label"] == "crossing_plus"
        for side in ("retreat", "advance"):
            stable = [e for e in payload["equilibria"][side] if e["stability"] == "stable node"]
            assert stable and all(e["filippov_class"] == "virtual" for e in stable)
        assert payload["in_separation_regime"] is True
