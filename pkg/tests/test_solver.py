import numpy as np
import pytest
import scipy.sparse as sps

from ddrym import (
    NewtonConfig,
    NewtonError,
    SolverError,
    estimate_min_singular_value,
    jacobian_fd_check,
    newton_solve,
    solve_least_squares,
    solve_spd,
)


def test_solve_spd_identity():
    b = np.array([1.0, 2.0, 3.0])
    assert np.allclose(solve_spd(sps.identity(3, format="csr"), b), b)


def test_solve_spd_hand_example():
    m = np.array([[2.0, 1.0], [1.0, 2.0]])
    x = solve_spd(m, np.array([3.0, 3.0]))
    assert np.allclose(x, [1.0, 1.0], atol=1e-13)


def test_solve_spd_rejects_indefinite():
    m = np.array([[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(SolverError):
        solve_spd(m, np.array([1.0, 1.0]))


def test_solve_spd_rejects_nonsymmetric():
    m = np.array([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(SolverError, match="symmetric"):
        solve_spd(m, np.array([1.0, 1.0]))


def test_solve_spd_large_sparse():
    n = 2000
    main = 2.0 * np.ones(n)
    off = -np.ones(n - 1)
    m = sps.diags([off, main, off], [-1, 0, 1], format="csc")
    rng = np.random.default_rng(0)
    b = rng.standard_normal(n)
    x = solve_spd(m, b)
    assert np.linalg.norm(m @ x - b) <= 1e-12 * np.linalg.norm(b)


def test_least_squares_matches_direct_on_regular_system():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((40, 40)) + 40 * np.eye(40)
    b = rng.standard_normal(40)
    x = solve_least_squares(sps.csr_matrix(a), b)
    assert np.allclose(x, np.linalg.solve(a, b), atol=1e-10)


def test_least_squares_minimal_norm_on_rank_deficient():
    m = sps.csr_matrix(np.array([[1.0, 0.0], [0.0, 0.0]]))
    x = solve_least_squares(m, np.array([1.0, 0.0]))
    assert np.allclose(x, [1.0, 0.0], atol=1e-12)


def test_least_squares_inconsistent_reports_residual():
    m = sps.csr_matrix(np.array([[1.0, 0.0], [0.0, 0.0]]))
    report = []
    x = solve_least_squares(m, np.array([0.0, 1.0]), report=report)
    assert np.allclose(x, [0.0, 0.0], atol=1e-12)
    assert report[-1].residual == pytest.approx(1.0)


def test_least_squares_singular_consistent():
    # rank-2 symmetric saddle-like system with consistent rhs
    a = np.array([[2.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.5]])
    x_true = np.array([1.0, -1.0, 0.0])
    b = a @ x_true
    x = solve_least_squares(sps.csr_matrix(a), b)
    assert np.linalg.norm(a @ x - b) <= 1e-9 * np.linalg.norm(b)
    # minimal-norm solution is unique even though the system is singular
    null = np.array([1.0, 0.0, -2.0]) / np.sqrt(5)
    assert abs(x @ null) <= 1e-8


def test_newton_affine_single_iteration():
    a = np.array([[3.0, 1.0], [1.0, 2.0]])
    residual = lambda z: a @ z
    jacobian = lambda z: sps.csr_matrix(a)
    b = np.array([1.0, 1.0])
    z, rep = newton_solve(residual, jacobian, np.zeros(2), NewtonConfig(1e-12), b=b)
    assert rep.iterations == 1
    assert np.allclose(a @ z, b, atol=1e-12)


def test_newton_scalar_quadratic():
    # z^2 = 4 from z0 = 3 converges quadratically to 2
    residual = lambda z: z * z
    jacobian = lambda z: sps.csr_matrix(np.array([[2.0 * z[0]]]))
    z, rep = newton_solve(
        residual, jacobian, np.array([3.0]), NewtonConfig(1e-12), b=np.array([4.0])
    )
    assert z[0] == pytest.approx(2.0, abs=1e-10)
    assert rep.iterations <= 6


def test_newton_zero_data_absolute_criterion():
    residual = lambda z: z
    jacobian = lambda z: sps.identity(2, format="csr")
    z, rep = newton_solve(residual, jacobian, np.zeros(2), NewtonConfig(1e-10))
    assert rep.iterations == 0
    assert rep.converged


def test_newton_nonconvergence_raises():
    # gradient vanishes at the iterate: Newton step diverges
    residual = lambda z: np.array([np.arctan(z[0] * 40.0)])
    jacobian = lambda z: sps.csr_matrix(
        np.array([[40.0 / (1.0 + (40.0 * z[0]) ** 2)]])
    )
    with pytest.raises(NewtonError):
        newton_solve(residual, jacobian, np.array([5.0]), NewtonConfig(1e-14, 4))


def test_jacobian_fd_check_affine():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((10, 10))
    residual = lambda z: a @ z + 1.0
    jacobian = lambda z: sps.csr_matrix(a)
    assert jacobian_fd_check(residual, jacobian, rng.standard_normal(10)) <= 1e-9


def test_jacobian_fd_check_detects_corruption():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((10, 10))
    bad = a.copy()
    bad[3, 4] += 0.5
    residual = lambda z: a @ z
    jacobian = lambda z: sps.csr_matrix(bad)
    assert jacobian_fd_check(residual, jacobian, rng.standard_normal(10)) > 1e-3


def test_min_singular_value_identity():
    assert estimate_min_singular_value(sps.identity(5, format="csr")) == pytest.approx(
        1.0, rel=1e-6
    )


def test_min_singular_value_flags_near_singular():
    m = sps.diags([3.0, 2.0, 1e-14]).tocsr()
    est = estimate_min_singular_value(m)
    assert est <= 1e-12


def test_least_squares_residual_never_worse_than_direct():
    rng = np.random.default_rng(4)
    for _ in range(5):
        a = rng.standard_normal((25, 25)) + 25 * np.eye(25)
        b = rng.standard_normal(25)
        x_ls = solve_least_squares(sps.csr_matrix(a), b)
        x_direct = np.linalg.solve(a, b)
        r_ls = np.linalg.norm(a @ x_ls - b)
        r_direct = np.linalg.norm(a @ x_direct - b)
        assert r_ls <= r_direct + 1e-12 * np.linalg.norm(b)
