"""Theta-scheme time stepping for Maxwell and Yang-Mills on the LADDR complex.

Variants:
  * ``maxwell``: the linear scheme; one SPD solve per step after eliminating
    the potential update, which is affine.
  * ``ym``: the unconstrained nonlinear scheme, Newton-solved in (A, E).
  * ``ym-constrained``: the Lagrange-multiplier scheme, Newton-solved in
    (A, E, lambda); the multiplier block makes the linear systems possibly
    singular, so they are solved in the least-squares sense.

The magnetic field is B(A) = curl A + (1/2) [[A, A]]; time averages use
Z^{n+theta} = theta Z^{n+1} + (1-theta) Z^n, and B^{n+theta} is the convex
combination of magnetic fields at the two levels (the convention under which
the discrete energy identity telescopes).  Newton systems are written as
F(Z) = b with b collecting all terms independent of the unknown level; the
stopping criterion is ||F(Z) - b|| / ||b||, falling back to an absolute test
for vanishing data.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.sparse as sps

from .laddr import LaddrComplex, LieField
from .solver import (
    LeastSquaresReport,
    NewtonConfig,
    NewtonReport,
    newton_solve,
    solve_least_squares,
    solve_spd,
)

VARIANTS = ("maxwell", "ym", "ym-constrained")


@dataclass
class State:
    A: LieField
    E: LieField
    lam: Optional[LieField]
    t: float
    n: int


@dataclass
class SchemeConfig:
    variant: str = "ym-constrained"
    theta: float = 1.0
    dt: float = 0.1
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    manufactured_forcing: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown scheme variant {self.variant!r}")
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [1/2, 1]")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")


@dataclass
class DiagnosticsRow:
    step: int
    time: float
    energy_E: float
    energy_B: float
    newton_iters: int
    newton_residual: float
    constraint_drift_dual_norm: float
    linear_residual_max: float

    HEADER = (
        "step,time,energy_E,energy_B,newton_iters,newton_residual,"
        "constraint_drift_dual_norm,linear_residual_max"
    )

    def as_csv(self) -> str:
        return (
            f"{self.step},{self.time:.12g},{self.energy_E:.16e},{self.energy_B:.16e},"
            f"{self.newton_iters},{self.newton_residual:.6e},"
            f"{self.constraint_drift_dual_norm:.6e},{self.linear_residual_max:.6e}"
        )


def auto_steps(h: float, tmax: float = 1.0) -> int:
    """Uniform step count: max(10, ceil(5 tmax / h))."""
    return max(10, math.ceil(5.0 * tmax / h))


class Evolution:
    """Precomputed operators and the step/run drivers for one configuration.

    ``forcing`` supplies the manufactured data when enabled: an object with
    ``force_curl(t) -> LieField`` (the interpolated forcing term) and
    ``e_interp(t) -> LieField`` (the interpolated exact electric field).
    """

    def __init__(self, la: LaddrComplex, cfg: SchemeConfig, forcing=None):
        self.la = la
        self.cfg = cfg
        self.forcing = forcing
        if cfg.manufactured_forcing and forcing is None:
            raise ValueError("manufactured forcing requested but no provider given")
        self.n_curl = la.size("curl")
        self.n_grad = la.size("grad")
        self.M = la.gram_curl.tocsr()
        self.Md = la.gram_div.tocsr()
        self.Mg = la.gram_grad.tocsr()
        self.Gg = la.gradient_matrix
        self.Cg = la.curl_matrix
        self.GtM = (self.Gg.T @ self.M).tocsr()
        self.K_lin = (self.M @ self.Gg).tocsr()
        self.CtMd = (self.Cg.T @ self.Md).tocsr()
        self._maxwell_lu = None
        self._grad_gram_lu = None
        self.linear_reports: List[LeastSquaresReport] = []

    # -- scheme quantities ---------------------------------------------------

    def magnetic_field(self, A: LieField) -> LieField:
        b = self.la.curl(A)
        if self.cfg.variant != "maxwell":
            half = self.la.bracket_curl_curl(A, A)
            b = LieField("div", b.coeffs + 0.5 * half.coeffs)
        return b

    def constraint_functional(self, A: LieField, E: LieField) -> np.ndarray:
        """Values of the discrete constraint on the canonical grad basis."""
        c = self.GtM @ E.flat
        if self.cfg.variant != "maxwell":
            c = c + self.la.volume_bracket_test_grad(E, A)
        return c

    def constraint_dual_norm(self, c: np.ndarray) -> float:
        if self._grad_gram_lu is None:
            import scipy.sparse.linalg as spla

            self._grad_gram_lu = spla.splu(self.Mg.tocsc())
        y = self._grad_gram_lu.solve(c)
        r = c - self.Mg @ y
        if np.linalg.norm(r) > 1e-12 * max(np.linalg.norm(c), 1e-300):
            y = y + self._grad_gram_lu.solve(r)
        return float(np.sqrt(max(c @ y, 0.0)))

    def energy(self, state: State):
        b = self.magnetic_field(state.A)
        ee = 0.5 * self.la.la_inner("curl", state.E, state.E)
        eb = 0.5 * float(b.flat @ (self.Md @ b.flat))
        return ee, eb

    # -- initial conditions ----------------------------------------------------

    def interpolate_ics(self, a0_field, e0_field) -> State:
        A = self.la.interpolate_curl(a0_field)
        E = self.la.interpolate_curl(e0_field)
        return State(A=A, E=E, lam=None, t=0.0, n=0)

    def project_ics(self, a0_field, e0_field) -> State:
        """Constrained initial data: A interpolated, (E, lambda) solving the
        linear saddle system that zeroes the discrete constraint."""
        A = self.la.interpolate_curl(a0_field)
        e_bar = self.la.interpolate_curl(e0_field)
        k_full = self.K_lin
        if self.cfg.variant != "maxwell":
            k_full = (k_full + self.la.volume_coupling_matrix(A)).tocsr()
        top = sps.hstack([self.M, k_full])
        bot = sps.hstack([k_full.T, sps.csr_matrix((self.n_grad, self.n_grad))])
        sysm = sps.vstack([top, bot]).tocsc()
        rhs = np.concatenate([self.M @ e_bar.flat, np.zeros(self.n_grad)])
        x = solve_least_squares(sysm, rhs, report=self.linear_reports)
        E = self.la.field("curl", x[: self.n_curl])
        lam = self.la.field("grad", x[self.n_curl :])
        return State(A=A, E=E, lam=lam, t=0.0, n=0)

    # -- steps -------------------------------------------------------------------

    def step(self, state: State):
        """One time step; returns (new_state, newton_report)."""
        if self.cfg.variant == "maxwell":
            return self._step_maxwell(state)
        return self._step_ym(state)

    def _forcing_vec(self, t: float) -> np.ndarray:
        if not self.cfg.manufactured_forcing:
            return np.zeros(self.n_curl)
        return self.M @ self.forcing.force_curl(t).flat

    def _step_maxwell(self, state: State):
        cfg = self.cfg
        th, dt = cfg.theta, cfg.dt
        a, e = state.A.flat, state.E.flat
        if self._maxwell_lu is None:
            import scipy.sparse.linalg as spla

            K = (self.CtMd @ self.Cg).tocsc()
            self._maxwell_K = K
            self._maxwell_sys = (self.M + (th * dt) ** 2 * K).tocsc()
            self._maxwell_lu = spla.splu(self._maxwell_sys)
        K = self._maxwell_K
        rhs = self.M @ e + dt * (K @ a) - th * (1 - th) * dt**2 * (K @ e)
        rhs = rhs + dt * self._forcing_vec(state.t + th * dt)
        e_new = self._maxwell_lu.solve(rhs)
        res = np.linalg.norm(self._maxwell_sys @ e_new - rhs)
        rel = res / max(np.linalg.norm(rhs), 1e-300)
        self.linear_reports.append(LeastSquaresReport(res, rel, "lu"))
        a_new = a - dt * (th * e_new + (1 - th) * e)
        new = State(
            A=self.la.field("curl", a_new),
            E=self.la.field("curl", e_new),
            lam=None,
            t=state.t + dt,
            n=state.n + 1,
        )
        rep = NewtonReport(iterations=1, residual=rel, converged=True)
        rep.linear_residuals.append(rel)
        return new, rep

    def _split(self, z: np.ndarray):
        nc = self.n_curl
        a = self.la.field("curl", z[:nc])
        e = self.la.field("curl", z[nc : 2 * nc])
        lam = None
        if self.cfg.variant == "ym-constrained":
            lam = self.la.field("grad", z[2 * nc :])
        return a, e, lam

    def _residual_full(self, z: np.ndarray, state: State) -> np.ndarray:
        """Nonlinear residual of the step equations (zero at the solution)."""
        cfg, la = self.cfg, self.la
        th, dt = cfg.theta, cfg.dt
        constrained = cfg.variant == "ym-constrained"
        a_old, e_old = state.A.flat, state.E.flat
        a, e, lam = self._split(z)
        a_half = la.field("curl", 0.5 * (a.flat + a_old))
        a_th = la.field("curl", th * a.flat + (1 - th) * a_old)
        b_new = self.magnetic_field(a)
        b_th = th * b_new.flat + (1 - th) * self._b_old
        y = self.Md @ b_th
        r1 = (a.flat - a_old) / dt + th * e.flat + (1 - th) * e_old
        w_half = la.face_bracket_matrix(a_half)
        r2 = (
            self.M @ (e.flat - e_old) / dt
            - self.Cg.T @ y
            - w_half.T @ y
            - self._f2
        )
        if not constrained:
            return np.concatenate([r1, r2])
        r2 = r2 + self.K_lin @ lam.flat + la.volume_bracket_test_curl(a_th, lam)
        a_1mth = la.field("curl", (1 - th) * a.flat + th * a_old)
        w = la.field("curl", e.flat - e_old - self._dE_interp)
        r3 = (self.GtM @ w.flat + la.volume_bracket_test_grad(w, a_1mth)) / dt
        return np.concatenate([r1, r2, r3])

    def _jacobian(self, z: np.ndarray, state: State) -> sps.csc_matrix:
        cfg, la = self.cfg, self.la
        th, dt = cfg.theta, cfg.dt
        constrained = cfg.variant == "ym-constrained"
        a_old, e_old = state.A.flat, state.E.flat
        a, e, lam = self._split(z)
        a_half = la.field("curl", 0.5 * (a.flat + a_old))
        a_th = la.field("curl", th * a.flat + (1 - th) * a_old)
        b_new = self.magnetic_field(a)
        b_th = th * b_new.flat + (1 - th) * self._b_old
        y = self.Md @ b_th
        nc = self.n_curl
        eye = sps.identity(nc, format="csr")
        j11 = eye / dt
        j12 = th * eye
        w_half = la.face_bracket_matrix(a_half)
        w_new = la.face_bracket_matrix(a)
        db = self.Cg + w_new
        j21 = -(0.5 * la.face_bracket_weighted_jacobian(y) + th * (self.Cg.T + w_half.T) @ self.Md @ db)
        j22 = self.M / dt
        if not constrained:
            return sps.bmat([[j11, j12], [j21, j22]], format="csc")
        j21 = j21 + th * la.volume_coupling_wrt_a(lam)
        j23 = self.K_lin + la.volume_coupling_matrix(a_th)
        a_1mth = la.field("curl", (1 - th) * a.flat + th * a_old)
        j32 = (self.GtM + la.volume_coupling_matrix(a_1mth).T) / dt
        if th < 1.0:
            w = la.field("curl", e.flat - e_old - self._dE_interp)
            j31 = (1 - th) / dt * la.volume_coupling_wrt_a_grad_test(w)
        else:
            j31 = None
        ng = self.n_grad
        return sps.bmat(
            [[j11, j12, None], [j21, j22, j23], [j31, j32, sps.csr_matrix((ng, ng))]],
            format="csc",
        )

    def _step_ym(self, state: State):
        cfg, la = self.cfg, self.la
        th, dt = cfg.theta, cfg.dt
        constrained = cfg.variant == "ym-constrained"
        self._b_old = self.magnetic_field(state.A).flat
        self._f2 = self._forcing_vec(state.t + th * dt)
        if cfg.manufactured_forcing:
            e0 = self.forcing.e_interp(state.t).flat
            e1 = self.forcing.e_interp(state.t + dt).flat
            self._dE_interp = e1 - e0
        else:
            self._dE_interp = np.zeros(self.n_curl)

        nz = 2 * self.n_curl + (self.n_grad if constrained else 0)
        z0 = np.concatenate(
            [state.A.flat, state.E.flat]
            + ([state.lam.flat if state.lam is not None else np.zeros(self.n_grad)]
               if constrained else [])
        )
        b = -self._residual_full(np.zeros(nz), state)
        func = lambda z: self._residual_full(z, state) + b
        jac = lambda z: self._jacobian(z, state)
        z, rep = newton_solve(func, jac, z0, self.cfg.newton, b=b)
        for r in rep.linear_residuals:
            self.linear_reports.append(LeastSquaresReport(np.nan, r, "newton"))
        a, e, lam = self._split(z)
        new = State(A=a, E=e, lam=lam, t=state.t + dt, n=state.n + 1)
        return new, rep

    # -- driver --------------------------------------------------------------

    def run(self, state: State, steps: int):
        """March ``steps`` uniform steps; returns (trajectory, diagnostics)."""
        c0 = self.constraint_functional(state.A, state.E)
        traj = [state]
        rows = [self._diag_row(state, NewtonReport(converged=True, residual=0.0), c0, 0.0)]
        for _ in range(steps):
            n_before = len(self.linear_reports)
            state, rep = self.step(state)
            lin_max = max(
                (r.relative_residual for r in self.linear_reports[n_before:]),
                default=0.0,
            )
            traj.append(state)
            rows.append(self._diag_row(state, rep, c0, lin_max))
        return traj, rows

    def _diag_row(self, state, rep, c0, lin_max) -> DiagnosticsRow:
        ee, eb = self.energy(state)
        drift = self.constraint_functional(state.A, state.E) - c0
        return DiagnosticsRow(
            step=state.n,
            time=state.t,
            energy_E=ee,
            energy_B=eb,
            newton_iters=rep.iterations,
            newton_residual=rep.residual,
            constraint_drift_dual_norm=self.constraint_dual_norm(drift),
            linear_residual_max=lin_max,
        )


# -- module-level convenience mirroring the operation map ----------------------


def magnetic_field(la: LaddrComplex, A: LieField) -> LieField:
    b = la.curl(A)
    half = la.bracket_curl_curl(A, A)
    return LieField("div", b.coeffs + 0.5 * half.coeffs)


def constraint_functional(la: LaddrComplex, A: LieField, E: LieField) -> np.ndarray:
    return (la.gradient_matrix.T @ (la.gram_curl @ E.flat)) + la.volume_bracket_test_grad(
        E, A
    )


def constraint_dual_norm(la: LaddrComplex, c: np.ndarray) -> float:
    y = solve_spd(la.gram_grad, c)
    return float(np.sqrt(max(c @ y, 0.0)))
