"""Closed-form su(2) gauge potential for convergence studies.

The potential is A(t) = cos(t) Phi ox e1 + sin(t) Phi ox e2 + Psi(t) ox e3
with Phi a trigonometric profile on the unit cube; it satisfies
d^2 A / dt^2 = -A, so the exact electric field is E = -dA/dt and the
E-equation forcing is F = dE/dt - curl B - x-bracket(A, B) = A - curl B -
x-bracket(A, B).

All single derivatives (dA/dt, curl A, curl curl A) are closed-form; the
curl of the quadratic part of B is evaluated by Richardson-extrapolated
central differences (base step 1e-4, two levels), which the startup
self-test validates against the closed-form curl to 1e-9.
"""

import numpy as np

from .laddr import LaddrComplex, LieField
from .lie import LieAlgebra, su2

FD_STEP = 1e-4
SELFTEST_TOL = 1e-9

_EPS3 = np.zeros((3, 3, 3))
for _i, _j, _k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
    _EPS3[_i, _j, _k] = 1.0
    _EPS3[_i, _k, _j] = -1.0


def star_bracket(alg: LieAlgebra, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Component form eps^a_{mn} [v^m, w^n] for (n, 3, dim) field values."""
    return np.einsum("amn,qmi,qnj,ijk->qak", _EPS3, v, w, alg.structure, optimize=True)


def dot_bracket(alg: LieAlgebra, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Component form [v^a, w_a] (scalar output) for (n, 3, dim) values."""
    return np.einsum("qai,qaj,ijk->qk", v, w, alg.structure, optimize=True)


def _trig(pts):
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    p = np.pi
    return (
        np.sin(p * x), np.cos(p * x),
        np.sin(p * y), np.cos(p * y),
        np.sin(p * z), np.cos(p * z),
    )


def _phi(pts):
    sx, cx, sy, cy, sz, cz = _trig(pts)
    return np.stack([-0.5 * sx * cy * cz, cx * sy * cz, -0.5 * cx * cy * sz], axis=1)


def _curl_phi(pts):
    sx, cx, sy, cy, sz, cz = _trig(pts)
    f = 1.5 * np.pi
    return np.stack([f * cx * sy * sz, np.zeros(len(pts)), -f * sx * sy * cz], axis=1)


class ManufacturedSolution:
    """Gauge potential, derived fields and forcing on the unit cube."""

    def __init__(self, algebra: LieAlgebra = None):
        self.algebra = su2() if algebra is None else algebra
        if self.algebra.dim < 3:
            raise ValueError("the manufactured potential needs at least 3 algebra axes")

    # -- closed forms -------------------------------------------------------

    def potential(self, t: float, pts: np.ndarray) -> np.ndarray:
        """A(t, x); shape (n, 3, dim)."""
        pts = np.atleast_2d(pts)
        sx, cx, sy, cy, sz, cz = _trig(pts)
        out = np.zeros((len(pts), 3, self.algebra.dim))
        phi = _phi(pts)
        out[:, :, 0] = np.cos(t) * phi
        out[:, :, 1] = np.sin(t) * phi
        out[:, 0, 2] = -0.5 * np.sin(t) * sy**2
        out[:, 1, 2] = np.cos(t) * cz**2
        out[:, 2, 2] = -0.5 * np.sin(t) * cx**2
        return out

    def electric(self, t: float, pts: np.ndarray) -> np.ndarray:
        """E = -dA/dt; shape (n, 3, dim)."""
        pts = np.atleast_2d(pts)
        sx, cx, sy, cy, sz, cz = _trig(pts)
        out = np.zeros((len(pts), 3, self.algebra.dim))
        phi = _phi(pts)
        out[:, :, 0] = np.sin(t) * phi
        out[:, :, 1] = -np.cos(t) * phi
        out[:, 0, 2] = 0.5 * np.cos(t) * sy**2
        out[:, 1, 2] = np.sin(t) * cz**2
        out[:, 2, 2] = 0.5 * np.cos(t) * cx**2
        return out

    def curl_potential(self, t: float, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        sx, cx, sy, cy, sz, cz = _trig(pts)
        out = np.zeros((len(pts), 3, self.algebra.dim))
        cphi = _curl_phi(pts)
        out[:, :, 0] = np.cos(t) * cphi
        out[:, :, 1] = np.sin(t) * cphi
        p = np.pi
        out[:, 0, 2] = 2 * p * np.cos(t) * cz * sz
        out[:, 1, 2] = -p * np.sin(t) * sx * cx
        out[:, 2, 2] = p * np.sin(t) * sy * cy
        return out

    def _curl_curl_potential(self, t: float, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
        p = np.pi
        out = np.zeros((len(pts), 3, self.algebra.dim))
        ccphi = 3 * p**2 * _phi(pts)
        out[:, :, 0] = np.cos(t) * ccphi
        out[:, :, 1] = np.sin(t) * ccphi
        out[:, 0, 2] = p**2 * np.sin(t) * np.cos(2 * p * y)
        out[:, 1, 2] = 2 * p**2 * np.cos(t) * np.cos(2 * p * z)
        out[:, 2, 2] = -(p**2) * np.sin(t) * np.cos(2 * p * x)
        return out

    def _bracket_part(self, t: float, pts: np.ndarray) -> np.ndarray:
        a = self.potential(t, pts)
        return 0.5 * star_bracket(self.algebra, a, a)

    def magnetic(self, t: float, pts: np.ndarray) -> np.ndarray:
        """B = curl A + (1/2) x-bracket(A, A)."""
        return self.curl_potential(t, pts) + self._bracket_part(t, pts)

    # -- finite-difference curl for the quadratic part ------------------------

    def _fd_curl(self, f, pts: np.ndarray, h: float = FD_STEP) -> np.ndarray:
        # curl_a = eps_{a m n} d_m f_n, Richardson-extrapolated over two levels
        def curl_of(hh):
            parts = []
            for d in range(3):
                dp = np.zeros(3)
                dp[d] = hh
                parts.append((f(pts + dp) - f(pts - dp)) / (2.0 * hh))
            grad = np.stack(parts, axis=1)  # (n, m, comp, dim)
            return np.einsum("amn,qmnk->qak", _EPS3, grad, optimize=True)

        d1 = curl_of(h)
        d2 = curl_of(0.5 * h)
        return (4.0 * d2 - d1) / 3.0

    def curl_magnetic(self, t: float, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        lin = self._curl_curl_potential(t, pts)
        quad = self._fd_curl(lambda q: self._bracket_part(t, q), pts)
        return lin + quad

    def forcing(self, t: float, pts: np.ndarray) -> np.ndarray:
        """F = dE/dt - curl B - x-bracket(A, B); dE/dt = A by construction."""
        pts = np.atleast_2d(pts)
        a = self.potential(t, pts)
        b = self.magnetic(t, pts)
        return a - self.curl_magnetic(t, pts) - star_bracket(self.algebra, a, b)

    # -- validation -----------------------------------------------------------

    def self_test(self, samples: int = 20, seed: int = 0, tol: float = SELFTEST_TOL):
        """Validate the FD machinery and the analytic time derivative.

        Checks the FD curl against the closed-form curl of A and E against a
        Richardson time derivative of A at random (t, x).

        Raises:
            AssertionError: a discrepancy exceeds ``tol``.
        """
        rng = np.random.default_rng(seed)
        pts = rng.uniform(0.05, 0.95, (samples, 3))
        ts = rng.uniform(0.0, 1.0, samples)
        worst_curl = 0.0
        worst_e = 0.0
        for t in ts[:4]:
            fd = self._fd_curl(lambda q: self.potential(t, q), pts)
            worst_curl = max(worst_curl, np.abs(fd - self.curl_potential(t, pts)).max())
        for t in ts:
            h = FD_STEP
            d1 = (self.potential(t + h, pts) - self.potential(t - h, pts)) / (2 * h)
            d2 = (self.potential(t + h / 2, pts) - self.potential(t - h / 2, pts)) / h
            dt_a = (4.0 * d2 - d1) / 3.0
            worst_e = max(worst_e, np.abs(self.electric(t, pts) + dt_a).max())
        if worst_curl > tol:
            raise AssertionError(f"FD curl check failed: {worst_curl:.3e} > {tol:g}")
        if worst_e > tol:
            raise AssertionError(f"time-derivative check failed: {worst_e:.3e} > {tol:g}")
        return worst_curl, worst_e


def manufactured_eval(t: float, x) -> tuple:
    """(A, E, B, F) of the manufactured solution at one point, each (3, dim)."""
    ms = ManufacturedSolution()
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    return (
        ms.potential(t, pts)[0],
        ms.electric(t, pts)[0],
        ms.magnetic(t, pts)[0],
        ms.forcing(t, pts)[0],
    )


class ManufacturedForcing:
    """Interpolated forcing/exact-field provider for the evolution driver."""

    def __init__(self, la: LaddrComplex, solution: ManufacturedSolution, degree: int = 8):
        if la.algebra.dim != solution.algebra.dim:
            raise ValueError("algebra dimensions do not match")
        self.la = la
        self.solution = solution
        self.degree = degree
        self._e_cache = {}
        self._f_cache = {}

    def force_curl(self, t: float) -> LieField:
        key = float(t)
        if key not in self._f_cache:
            if len(self._f_cache) > 128:
                self._f_cache.clear()
            self._f_cache[key] = self.la.interpolate_curl(
                lambda pts: self.solution.forcing(t, pts), degree=self.degree
            )
        return self._f_cache[key]

    def e_interp(self, t: float) -> LieField:
        key = float(t)
        if key not in self._e_cache:
            if len(self._e_cache) > 128:
                self._e_cache.clear()
            self._e_cache[key] = self.la.interpolate_curl(
                lambda pts: self.solution.electric(t, pts), degree=self.degree
            )
        return self._e_cache[key]

    def a_interp(self, t: float) -> LieField:
        return self.la.interpolate_curl(
            lambda pts: self.solution.potential(t, pts), degree=self.degree
        )
