"""Shared fixtures. Converged cycles are expensive, so they are session-scoped."""
import dataclasses

import pytest

from glacialcycle import ModelParams, find_equilibria3, find_limit_cycle


@pytest.fixture(scope="session")
def params():
    return ModelParams()


@pytest.fixture(scope="session")
def symmetric_equilibria(params):
    return find_equilibria3(-10.0, -10.0, params)


@pytest.fixture(scope="session")
def asymmetric_equilibria(params):
    return find_equilibria3(-10.0, -5.0, params)


@pytest.fixture(scope="session")
def cycle_main(params):
    """The study's reference cycle: eps = 0.03, advance regime at -5 C."""
    return find_limit_cycle(0.03, params)


@pytest.fixture(scope="session")
def cycle_large_eps(params):
    return find_limit_cycle(0.3, params)


@pytest.fixture(scope="session")
def cycle_cold_advance(params):
    return find_limit_cycle(0.03, dataclasses.replace(params, T_cN_minus=-8.0))
