"""Fixtures that produce real simulation outputs through the public CLI."""
import subprocess
import sys

import pytest


def run_simulation(*argv):
    proc = subprocess.run(
        [sys.executable, "-m", "glacialcycle.cli", *argv], capture_output=True, text=True
    )
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def cycle_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cycle_out")
    run_simulation("cycle", "--out", str(out))
    return out


@pytest.fixture(scope="session")
def equilibria_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("equilibria_out")
    run_simulation("equilibria", "--out", str(out))
    return out


@pytest.fixture(scope="session")
def sweep_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep_out")
    run_simulation("sweep", "--set", "scenario.options.eps_values=[0.3]", "--out", str(out))
    return out


@pytest.fixture(scope="session")
def reduced_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("reduced_out")
    run_simulation(
        "simulate",
        "--set", "scenario.options.mode=reduced",
        "--set", "scenario.options.horizon=60.0",
        "--out", str(out),
    )
    return out
