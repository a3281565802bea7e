"""Sparse linear algebra and Newton iteration for the evolution schemes.

The least-squares path accepts singular and rank-deficient systems: SuperLU
with iterative refinement is attempted first and accepted only when it meets
the residual target; otherwise LSMR takes over, which returns the
minimal-norm minimiser for consistent singular systems.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
import scipy.sparse.linalg as spla

LSTSQ_TARGET = 1e-9
SPD_TARGET = 1e-12
DENSE_CUTOFF = 1200


class SolverError(Exception):
    """Linear factorisation or iteration failure."""


class NewtonError(SolverError):
    """Newton failed to reach the tolerance within the iteration budget."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass
class NewtonConfig:
    tolerance: float = 1e-6
    max_iterations: int = 50
    linear_mode: str = "least-squares"  # or "direct-spd"

    def __post_init__(self):
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be positive")


@dataclass
class NewtonReport:
    iterations: int = 0
    residual: float = np.inf
    linear_residuals: List[float] = field(default_factory=list)
    converged: bool = False


def _as_csc(m) -> sps.csc_matrix:
    if sps.issparse(m):
        return m.tocsc()
    return sps.csc_matrix(np.asarray(m, dtype=float))


def solve_spd(m, b: np.ndarray) -> np.ndarray:
    """Solve a symmetric positive definite system to 1e-12 relative residual."""
    mc = _as_csc(m)
    b = np.asarray(b, dtype=float)
    n = mc.shape[0]
    sym = abs(mc - mc.T).max() if mc.nnz else 0.0
    scale = abs(mc).max() if mc.nnz else 0.0
    if sym > 1e-12 * max(scale, 1.0):
        raise SolverError("matrix is not symmetric")
    if n <= DENSE_CUTOFF:
        try:
            cho = sla.cho_factor(mc.toarray())
        except sla.LinAlgError as exc:
            raise SolverError("factorisation failed: matrix is not SPD") from exc
        x = sla.cho_solve(cho, b)
    else:
        try:
            lu = spla.splu(mc)
        except RuntimeError as exc:
            raise SolverError(f"factorisation failed: {exc}") from exc
        x = lu.solve(b)
        for _ in range(3):
            r = b - mc @ x
            if np.linalg.norm(r) <= SPD_TARGET * max(np.linalg.norm(b), 1e-300):
                break
            x = x + lu.solve(r)
    res = np.linalg.norm(b - mc @ x)
    if res > SPD_TARGET * max(np.linalg.norm(b), 1e-300):
        raise SolverError("direct solve failed to reach the residual target")
    return x


@dataclass
class LeastSquaresReport:
    residual: float
    relative_residual: float
    method: str


def solve_least_squares(
    m, b: np.ndarray, target: float = LSTSQ_TARGET, report: Optional[list] = None
) -> np.ndarray:
    """Minimise ||Mx - b||, preferring the minimal-norm solution.

    A sparse LU with iterative refinement is used when it reaches the
    target relative residual; LSMR handles (near-)singular systems.  The
    achieved residual is appended to ``report`` when given.

    Raises:
        SolverError: the iteration budget is exhausted and the best residual
            exceeds the target while the system looks consistent.
    """
    mc = _as_csc(m)
    b = np.asarray(b, dtype=float)
    nrm_b = np.linalg.norm(b)
    if nrm_b == 0.0:
        if report is not None:
            report.append(LeastSquaresReport(0.0, 0.0, "trivial"))
        return np.zeros(mc.shape[1])
    x = None
    method = "lu"
    if mc.shape[0] == mc.shape[1]:
        try:
            lu = spla.splu(mc)
            x = lu.solve(b)
            for _ in range(3):
                r = b - mc @ x
                if np.linalg.norm(r) <= 1e-13 * nrm_b:
                    break
                x = x + lu.solve(r)
            if not np.all(np.isfinite(x)):
                x = None
        except RuntimeError:
            x = None
    if x is not None and np.linalg.norm(b - mc @ x) <= target * nrm_b:
        res = float(np.linalg.norm(b - mc @ x))
        if report is not None:
            report.append(LeastSquaresReport(res, res / nrm_b, method))
        return x
    # LSMR from zero converges to the minimal-norm minimiser.
    atol = min(1e-14, 0.1 * target)
    out = spla.lsmr(mc, b, atol=atol, btol=atol, conlim=0.0, maxiter=max(10000, 10 * mc.shape[1]))
    x = out[0]
    res = float(np.linalg.norm(b - mc @ x))
    rel = res / nrm_b
    # The normal-equation residual detects inconsistent systems, for which a
    # large ||Mx - b|| is the correct answer rather than a failure.
    normal_res = np.linalg.norm(mc.T @ (b - mc @ x))
    consistent_target = target * max(abs(mc).max(), 1.0) * max(np.linalg.norm(x), 1.0)
    if report is not None:
        report.append(LeastSquaresReport(res, rel, "lsmr"))
    if rel > target and normal_res > consistent_target:
        raise SolverError(
            f"least-squares iteration stalled: relative residual {rel:.3e}"
        )
    return x


def newton_solve(
    residual: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], sps.spmatrix],
    z0: np.ndarray,
    cfg: NewtonConfig,
    b: Optional[np.ndarray] = None,
):
    """Newton iteration for F(z) = b with a relative stopping criterion.

    Iterates DF(z_k)(z_{k+1} - z_k) = -(F(z_k) - b) and stops when
    ||F(z) - b|| / ||b|| <= tolerance.  When ``b`` is None (or vanishes) the
    residual is treated as already shifted and the test is absolute.

    Raises:
        NewtonError: tolerance not reached within the iteration budget; the
            report so far is attached to the exception.
    """
    z = np.array(z0, dtype=float)
    if b is None:
        b = np.zeros_like(z0, dtype=float)
        func = residual
    else:
        b = np.asarray(b, dtype=float)
        func = lambda zz: residual(zz) - b
    nrm_b = np.linalg.norm(b)
    denom = nrm_b if nrm_b > 1e-300 else 1.0
    rep = NewtonReport()
    r = func(z)
    rep.residual = float(np.linalg.norm(r) / denom)
    for it in range(cfg.max_iterations):
        if rep.residual <= cfg.tolerance:
            rep.converged = True
            return z, rep
        jac = jacobian(z)
        lin_report = []
        if cfg.linear_mode == "direct-spd":
            dz = solve_spd(jac, -r)
            lin_report.append(
                LeastSquaresReport(0.0, 0.0, "cholesky")
            )
        else:
            dz = solve_least_squares(jac, -r, report=lin_report)
        rep.linear_residuals.append(lin_report[-1].relative_residual)
        z = z + dz
        r = func(z)
        rep.iterations = it + 1
        rep.residual = float(np.linalg.norm(r) / denom)
    if rep.residual <= cfg.tolerance:
        rep.converged = True
        return z, rep
    raise NewtonError(
        f"Newton did not converge in {cfg.max_iterations} iterations "
        f"(residual {rep.residual:.3e})",
        report=rep,
    )


def jacobian_fd_check(
    residual: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], sps.spmatrix],
    z: np.ndarray,
    h_fd: float = 1e-6,
    directions: int = 8,
    seed: int = 0,
) -> float:
    """Max relative discrepancy between J d and central differences of F."""
    rng = np.random.default_rng(seed)
    jac = jacobian(z)
    scale = max(np.linalg.norm(residual(z)), 1.0)
    worst = 0.0
    for _ in range(directions):
        d = rng.standard_normal(len(z))
        d /= np.linalg.norm(d)
        fd = (residual(z + h_fd * d) - residual(z - h_fd * d)) / (2.0 * h_fd)
        jd = jac @ d
        denom = max(np.linalg.norm(jd), scale * h_fd, 1e-300)
        worst = max(worst, float(np.linalg.norm(fd - jd) / denom))
    return worst


def estimate_min_singular_value(
    m, maxiter: int = 200, tol: float = 1e-8
) -> float:
    """Lower-spectrum estimate via inverse power iteration on M^T M.

    Diagnostic only; a near-zero value flags a (numerically) singular
    system.
    """
    mc = _as_csc(m)
    n = mc.shape[1]
    normal = (mc.T @ mc).tocsc()
    scale = abs(normal).max() if normal.nnz else 0.0
    if scale == 0.0:
        return 0.0
    shift = 0.0
    try:
        lu = spla.splu(normal)
    except RuntimeError:
        shift = 1e-14 * scale
        lu = spla.splu((normal + shift * sps.identity(n)).tocsc())
    rng = np.random.default_rng(1)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    lam = np.inf
    for _ in range(maxiter):
        y = lu.solve(x)
        ny = np.linalg.norm(y)
        if not np.isfinite(ny) or ny == 0.0:
            return 0.0
        x_new = y / ny
        lam_new = float(x_new @ (normal @ x_new))
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-300):
            lam = lam_new
            break
        lam, x = lam_new, x_new
    return float(np.sqrt(max(lam, 0.0)))
