"""Tests for equilibrium location, spectra, lifting, and classification."""
import dataclasses

import numpy as np
import pytest

from glacialcycle import (
    Branch,
    ModelParams,
    classify_equilibrium,
    critical_ice_edge,
    find_equilibria3,
    jacobian3,
    lift_to_4d,
    mass_balance,
    rhs3,
    rhs4,
)
from glacialcycle.equilibria import _eigenvalues_3x3


def _sorted_eigs(values):
    return sorted(values, key=lambda z: (z.real, z.imag))


# ── Eigenvalue solver against the LAPACK oracle ─────────────────

class TestCubicEigenvalues:

    def test_matches_lapack_on_random_matrices(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            mat = rng.normal(scale=5.0, size=(3, 3))
            ours = _sorted_eigs(_eigenvalues_3x3(mat))
            ref = _sorted_eigs([complex(z) for z in np.linalg.eigvals(mat)])
            scale = max(1.0, max(abs(z) for z in ref))
            for a, b in zip(ours, ref):
                assert abs(a - b) / scale < 1e-8

    def test_characteristic_polynomial_residual(self, params, symmetric_equilibria):
        for report in symmetric_equilibria:
            jac = report.jacobian
            for lam in report.eigenvalues:
                residual = np.linalg.det(jac - lam * np.eye(3))
                assert abs(residual) < 1e-6


# ── Analytic Jacobian ───────────────────────────────────────────

class TestJacobian:

    def test_matches_central_differences(self, params):
        rng = np.random.default_rng(5)
        h = 1e-6
        for _ in range(10):
            state = np.array([rng.uniform(-20, 10), rng.uniform(-0.9, -0.1), rng.uniform(0.1, 0.9)])
            jac = jacobian3(state, -10.0, -5.0, params)
            fd = np.zeros((3, 3))
            for j in range(3):
                bump = np.zeros(3)
                bump[j] = h
                fd[:, j] = (
                    rhs3(state + bump, -10.0, -5.0, params)
                    - rhs3(state - bump, -10.0, -5.0, params)
                ) / (2 * h)
            assert np.max(np.abs(jac - fd) / np.maximum(np.abs(fd), 1e-3)) < 1e-6

    def test_mean_temp_diagonal_entry(self, params):
        jac = jacobian3((0.0, -0.5, 0.5), -10.0, -10.0, params)
        assert jac[0, 0] == -params.B / params.R == -1.9

    def test_southern_line_ignores_northern(self, params):
        jac = jacobian3((0.0, -0.5, 0.5), -10.0, -10.0, params)
        assert jac[1, 2] == 0.0
        assert jac[2, 1] == 0.0


# ── Locating equilibria ─────────────────────────────────────────

class TestFindEquilibria:

    def test_symmetric_case_two_interior_points(self, symmetric_equilibria):
        assert len(symmetric_equilibria) == 2
        saddle, stable = symmetric_equilibria
        assert saddle.point == pytest.approx((-17.118, -0.249, 0.249), abs=5e-3)
        assert stable.point == pytest.approx((5.188, -0.955, 0.955), abs=5e-3)
        assert stable.stability == "stable node"
        assert saddle.stability == "saddle"

    def test_symmetric_case_mirror_lines(self, symmetric_equilibria):
        for report in symmetric_equilibria:
            assert report.point.eta_N == pytest.approx(-report.point.eta_S, abs=1e-9)

    def test_stable_eigenvalues(self, symmetric_equilibria):
        stable = [r for r in symmetric_equilibria if r.stability == "stable node"][0]
        reals = sorted(z.real for z in stable.eigenvalues)
        assert reals == pytest.approx([-15.85, -15.05, -1.10], abs=5e-2)

    def test_asymmetric_case(self, asymmetric_equilibria):
        stable = [r for r in asymmetric_equilibria if r.stability == "stable node"]
        assert len(stable) == 1
        assert stable[0].point.eta_S == pytest.approx(-0.907, abs=5e-3)
        assert stable[0].point.eta_N == pytest.approx(0.795, abs=5e-3)

    def test_residuals_below_reporting_threshold(self, params, symmetric_equilibria, asymmetric_equilibria):
        for report, t_north in [(r, -10.0) for r in symmetric_equilibria] + [
            (r, -5.0) for r in asymmetric_equilibria
        ]:
            residual = np.max(np.abs(rhs3(report.point, -10.0, t_north, params)))
            assert residual < 1e-9

    def test_no_equilibria_far_below_freezing(self, params):
        assert find_equilibria3(-10.0, -60.0, params) == []

    def test_saddle_node_monotonicity(self, params):
        # warming the shared critical temperature draws the stable point
        # equatorward and the saddle poleward until they merge or exit
        stable_track, saddle_track = [], []
        for t_crit in np.linspace(-13.0, -6.0, 29):
            reports = find_equilibria3(t_crit, t_crit, params)
            stable = [r for r in reports if r.stability == "stable node"]
            saddle = [r for r in reports if r.stability == "saddle"]
            if len(stable) == 1 and len(saddle) == 1:
                stable_track.append(stable[0].point.eta_N)
                saddle_track.append(saddle[0].point.eta_N)
        assert len(stable_track) >= 10
        assert np.all(np.diff(stable_track) <= 0)
        assert np.all(np.diff(saddle_track) >= 0)


# ── Lifting to the flip-flop system ─────────────────────────────

class TestLift:

    def test_ice_edge_coordinate(self, params, symmetric_equilibria):
        stable = [r for r in symmetric_equilibria if r.stability == "stable node"][0]
        lifted = lift_to_4d(Branch.RETREAT, stable, params)
        ratio = params.a / params.b_plus
        expected = (1 + ratio) * stable.point.eta_N - ratio
        assert lifted.point.xi_N == expected
        assert lifted.point.xi_N == pytest.approx(0.94555, abs=5e-3)

    def test_extra_eigenvalue_is_exact(self, params, symmetric_equilibria):
        stable = [r for r in symmetric_equilibria if r.stability == "stable node"][0]
        lifted = lift_to_4d(Branch.RETREAT, stable, params)
        extra = set(lifted.eigenvalues) - set(stable.eigenvalues)
        assert extra == {complex(-params.eps * params.b_plus, 0.0)}
        assert abs(min(z.real for z in extra) - (-0.15)) < 1e-14

    def test_lifted_point_is_equilibrium(self, params, symmetric_equilibria, asymmetric_equilibria):
        for branch, reports in ((Branch.RETREAT, symmetric_equilibria), (Branch.ADVANCE, asymmetric_equilibria)):
            for report in reports:
                lifted = lift_to_4d(branch, report, params)
                assert np.max(np.abs(rhs4(branch, lifted.point, params))) < 1e-12

    def test_stability_survives_lift(self, params, symmetric_equilibria):
        for report in symmetric_equilibria:
            lifted = lift_to_4d(Branch.RETREAT, report, params)
            assert lifted.stability == report.stability

    def test_rejects_non_equilibrium(self, params, symmetric_equilibria):
        bogus = dataclasses.replace(
            symmetric_equilibria[0],
            point=type(symmetric_equilibria[0].point)(0.0, -0.5, 0.5),
        )
        with pytest.raises(ValueError, match="not an equilibrium"):
            lift_to_4d(Branch.RETREAT, bogus, params)


# ── Regular / virtual / boundary classification ─────────────────

class TestClassification:

    def test_stable_points_are_virtual(self, params, symmetric_equilibria, asymmetric_equilibria):
        retreat_stable = [r for r in symmetric_equilibria if r.stability == "stable node"][0]
        advance_stable = [r for r in asymmetric_equilibria if r.stability == "stable node"][0]
        lifted_plus = lift_to_4d(Branch.RETREAT, retreat_stable, params)
        lifted_minus = lift_to_4d(Branch.ADVANCE, advance_stable, params)
        assert lifted_plus.filippov_class == "virtual"
        assert lifted_minus.filippov_class == "virtual"
        # closed-form mass balance signs: a (1 - eta_N)(b / b_pm - 1)
        h_plus = mass_balance(lifted_plus.point, params)
        eta = retreat_stable.point.eta_N
        assert h_plus == pytest.approx(params.a * (1 - eta) * (params.b / params.b_plus - 1), abs=1e-12)
        assert h_plus < 0
        assert h_plus == pytest.approx(-0.0307, abs=1e-3)
        assert mass_balance(lifted_minus.point, params) > 0

    def test_point_on_manifold_is_boundary(self, params):
        state = (3.0, -0.8, 0.7, critical_ice_edge(0.7, params))
        assert classify_equilibrium(state, Branch.RETREAT, params) == "boundary"

    def test_regular_when_inside_own_region(self, params):
        state = (3.0, -0.8, 0.7, critical_ice_edge(0.7, params) - 0.05)  # mass balance > 0
        assert classify_equilibrium(state, Branch.RETREAT, params) == "regular"
        assert classify_equilibrium(state, Branch.ADVANCE, params) == "virtual"
