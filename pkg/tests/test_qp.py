"""Unit tests for the dense QP solver."""

import numpy as np
import pytest

from shiftgov.qp import DenseQp, QpSettings, QpStatus, kkt_residual, solve

from oracles import enum_qp


def test_unconstrained_matches_newton_step():
    qp = DenseQp(np.eye(2), np.array([-1.0, -2.0]))
    sol = solve(qp)
    assert sol.status == QpStatus.OPTIMAL
    assert sol.iterations == 0  # direct solve path, no constraints at all
    assert np.allclose(sol.z, [1.0, 2.0], atol=1e-8)


def test_single_upper_bound_clips():
    # min (z - 5)^2 with z <= 2 sits on the bound
    qp = DenseQp(np.array([[2.0]]), np.array([-10.0]), ub=np.array([2.0]))
    sol = solve(qp)
    assert sol.status == QpStatus.OPTIMAL
    assert sol.z[0] == pytest.approx(2.0, abs=1e-8)


def test_row_constraint_analytic():
    # min 1/2|z|^2 - 3 z1 s.t. z1 + z2 <= 2 -> z = (2.5, -0.5), lam = 0.5
    qp = DenseQp(np.eye(2), np.array([-3.0, 0.0]),
                 A=np.array([[1.0, 1.0]]), b=np.array([2.0]))
    sol = solve(qp)
    assert sol.status == QpStatus.OPTIMAL
    assert np.allclose(sol.z, [2.5, -0.5], atol=1e-7)
    assert sol.lam[0] == pytest.approx(0.5, abs=1e-6)


def test_pinned_box():
    qp = DenseQp(np.eye(3), np.zeros(3),
                 lb=np.array([1.0, -2.0, 0.5]), ub=np.array([1.0, -2.0, 0.5]))
    sol = solve(qp)
    assert sol.status == QpStatus.OPTIMAL
    assert np.allclose(sol.z, [1.0, -2.0, 0.5], atol=1e-8)


def test_singular_hessian_with_l1_slack():
    """Penalized slack column (zero H row) mirrors the controller's QPs."""
    w = 50.0
    # min (z1 - a)^2 + w s  s.t.  z1 - s <= b, s >= 0
    for a_des, b in [(2.0, 3.0), (2.0, -1.0), (0.0, -4.0)]:
        qp = DenseQp(
            np.diag([2.0, 0.0]), np.array([-2.0 * a_des, w]),
            A=np.array([[1.0, -1.0]]), b=np.array([b]),
            lb=np.array([-np.inf, 0.0]))
        sol = solve(qp)
        assert sol.status == QpStatus.OPTIMAL
        # oracle over the equivalent all-rows form
        z_ref = enum_qp(
            np.diag([2.0, 1e-7]), np.array([-2.0 * a_des, w]),
            np.array([[1.0, -1.0], [0.0, -1.0]]), np.array([b, 0.0]))
        assert sol.z[0] == pytest.approx(z_ref[0], abs=1e-5)
        assert sol.z[1] == pytest.approx(z_ref[1], abs=1e-5)


def test_warm_start_converges():
    rng = np.random.default_rng(21)
    M = rng.normal(size=(4, 4))
    qp = DenseQp(M @ M.T + 4.0 * np.eye(4), rng.normal(size=4) * 3.0,
                 A=rng.normal(size=(5, 4)), b=rng.uniform(0.5, 2.0, 5),
                 lb=np.full(4, -3.0), ub=np.full(4, 3.0))
    cold = solve(qp)
    assert cold.status == QpStatus.OPTIMAL
    y_full = np.concatenate([cold.lam, cold.bound_duals])
    warm = solve(qp, warm_start=(cold.z, y_full))
    assert warm.status == QpStatus.OPTIMAL
    assert np.allclose(warm.z, cold.z, atol=1e-6)
    assert warm.iterations <= cold.iterations


def test_contradictory_rows_flagged_infeasible():
    # z <= -1 and -z <= -1 cannot both hold
    qp = DenseQp(np.array([[2.0]]), np.zeros(1),
                 A=np.array([[1.0], [-1.0]]), b=np.array([-1.0, -1.0]))
    sol = solve(qp)
    assert sol.status == QpStatus.INFEASIBLE


def test_infeasible_box_against_row():
    # row forces z1 + z2 <= -10 while the box keeps both in [0, 1]
    qp = DenseQp(np.eye(2), np.zeros(2),
                 A=np.array([[1.0, 1.0]]), b=np.array([-10.0]),
                 lb=np.zeros(2), ub=np.ones(2))
    sol = solve(qp)
    assert sol.status == QpStatus.INFEASIBLE


def test_max_iter_reported_honestly():
    rng = np.random.default_rng(8)
    M = rng.normal(size=(6, 6))
    qp = DenseQp(M @ M.T + 0.01 * np.eye(6), rng.normal(size=6),
                 A=rng.normal(size=(8, 6)), b=rng.uniform(0.1, 1.0, 8),
                 lb=np.full(6, -2.0), ub=np.full(6, 2.0))
    crippled = QpSettings(max_iter=2, check_every=1, polish=False)
    sol = solve(qp, crippled)
    assert sol.status in (QpStatus.MAX_ITER, QpStatus.OPTIMAL)
    if sol.status == QpStatus.MAX_ITER:
        # residual reflects the returned iterate, not wishful thinking
        assert sol.kkt_residual > QpSettings().tol
        assert sol.kkt_residual == pytest.approx(
            kkt_residual(qp, sol.z, sol.lam), abs=1e-12)


def test_random_battery_vs_enumeration():
    rng = np.random.default_rng(777)
    for _ in range(50):
        n = int(rng.integers(1, 6))
        m = int(rng.integers(1, 9))
        M = rng.normal(size=(n, n))
        H = M @ M.T + n * np.eye(n)
        g = 3.0 * rng.normal(size=n)
        A = rng.normal(size=(m, n))
        interior = rng.normal(size=n)
        b = A @ interior + rng.uniform(0.1, 2.0, m)
        qp = DenseQp(H, g, A=A, b=b)
        sol = solve(qp)
        assert sol.status == QpStatus.OPTIMAL
        z_ref = enum_qp(H, g, A, b)
        assert np.max(np.abs(sol.z - z_ref)) <= 1e-6
        assert sol.kkt_residual <= 1e-6


def test_repeat_solve_is_deterministic():
    rng = np.random.default_rng(99)
    M = rng.normal(size=(5, 5))
    qp = DenseQp(M @ M.T + np.eye(5), rng.normal(size=5),
                 A=rng.normal(size=(7, 5)), b=rng.uniform(0.2, 1.5, 7),
                 lb=np.full(5, -4.0), ub=np.full(5, 4.0))
    s1 = solve(qp)
    s2 = solve(qp)
    assert s1.status == s2.status
    assert s1.iterations == s2.iterations
    assert np.array_equal(s1.z, s2.z)
    assert np.array_equal(s1.lam, s2.lam)


def test_validate_rejects_malformed_problems():
    with pytest.raises(ValueError):
        solve(DenseQp(np.array([[1.0, 0.5], [0.0, 1.0]]), np.zeros(2)))
    with pytest.raises(ValueError):
        solve(DenseQp(np.eye(1), np.zeros(1),
                      lb=np.array([2.0]), ub=np.array([1.0])))
    with pytest.raises(ValueError):
        solve(DenseQp(np.eye(3), np.zeros(2)))


def test_kkt_residual_zero_at_optimum_positive_off():
    qp = DenseQp(np.eye(2), np.array([-3.0, 0.0]),
                 A=np.array([[1.0, 1.0]]), b=np.array([2.0]))
    assert kkt_residual(qp, np.array([2.5, -0.5]), np.array([0.5])) <= 1e-12
    assert kkt_residual(qp, np.array([0.0, 0.0]), np.array([0.0])) > 1.0
