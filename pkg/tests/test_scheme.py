import numpy as np
import pytest
import scipy.linalg as sla

from ddrym import (
    DdrComplex,
    LaddrComplex,
    LieField,
    NewtonConfig,
    build_cubic_mesh,
    jacobian_fd_check,
    su2,
    u1,
)
from ddrym.manufactured import ManufacturedForcing, ManufacturedSolution
from ddrym.scheme import (
    DiagnosticsRow,
    Evolution,
    SchemeConfig,
    State,
    auto_steps,
    constraint_functional,
    magnetic_field,
)


def rand_field(la, space, rng, scale=0.5):
    n = la.ddr.space_size(space)
    return LieField(space, scale * rng.standard_normal((n, la.algebra.dim)))


def rand_state(la, rng, scale=0.5, lam=True):
    return State(
        A=rand_field(la, "curl", rng, scale),
        E=rand_field(la, "curl", rng, scale),
        lam=la.zeros("grad") if lam else None,
        t=0.0,
        n=0,
    )


@pytest.fixture(scope="module")
def la2():
    return LaddrComplex(DdrComplex(build_cubic_mesh(2)), su2())


@pytest.fixture(scope="module")
def la1_u1():
    return LaddrComplex(DdrComplex(build_cubic_mesh(2)), u1())


def test_config_validation():
    with pytest.raises(ValueError):
        SchemeConfig(variant="unknown")
    with pytest.raises(ValueError):
        SchemeConfig(theta=0.3)
    with pytest.raises(ValueError):
        SchemeConfig(dt=0.0)
    with pytest.raises(ValueError):
        NewtonConfig(tolerance=-1.0)


def test_auto_steps_rule():
    assert auto_steps(np.sqrt(3) / 2) == 10
    assert auto_steps(np.sqrt(3) / 4) == 12
    assert auto_steps(np.sqrt(3) / 8) == 24
    assert auto_steps(0.5, tmax=2.0) == 20


def test_magnetic_field_zero(la2):
    assert np.abs(magnetic_field(la2, la2.zeros("curl")).coeffs).max() == 0.0


def test_magnetic_field_abelian_is_curl(la1_u1):
    rng = np.random.default_rng(0)
    a = rand_field(la1_u1, "curl", rng)
    b = magnetic_field(la1_u1, a)
    assert np.allclose(b.coeffs, la1_u1.curl(a).coeffs)


def test_magnetic_field_of_gradient_abelian(la1_u1):
    rng = np.random.default_rng(1)
    q = rand_field(la1_u1, "grad", rng)
    b = magnetic_field(la1_u1, la1_u1.gradient(q))
    assert np.abs(b.coeffs).max() <= 1e-13


def test_constraint_functional_zero_e(la2):
    c = constraint_functional(la2, la2.zeros("curl"), la2.zeros("curl"))
    assert np.abs(c).max() == 0.0


def test_constraint_functional_constant_e(la2):
    # A = 0 and E = interpolate of a constant: gradient pairing integrates
    # the constant against G of basis functions; the bracket term vanishes
    def f(p):
        out = np.zeros((len(p), 3, 3))
        out[:, 0, 0] = 1.0
        return out

    e = la2.interpolate_curl(f)
    cfg = SchemeConfig(variant="ym-constrained", theta=1.0, dt=0.1)
    ev = Evolution(la2, cfg)
    c = ev.constraint_functional(la2.zeros("curl"), e)
    # pairing with the constant basis function is zero (G of constant = 0)
    ones = np.zeros((la2.mesh.n_vertices, 3))
    ones[:, 0] = 1.0
    assert abs(c @ ones.reshape(-1)) <= 1e-12


def test_constraint_dual_norm_examples(la2):
    cfg = SchemeConfig(variant="ym-constrained", theta=1.0, dt=0.1)
    ev = Evolution(la2, cfg)
    assert ev.constraint_dual_norm(np.zeros(la2.size("grad"))) == 0.0
    rng = np.random.default_rng(2)
    y = rng.standard_normal(la2.size("grad"))
    c = la2.gram_grad @ y
    # Riesz identity: ||M y||_dual = sqrt(y^T M y)
    assert ev.constraint_dual_norm(c) == pytest.approx(
        np.sqrt(y @ (la2.gram_grad @ y)), rel=1e-10
    )
    # dense-factorisation oracle
    c = rng.standard_normal(la2.size("grad"))
    dense = la2.gram_grad.toarray()
    expect = np.sqrt(c @ sla.solve(dense, c, assume_a="pos"))
    assert ev.constraint_dual_norm(c) == pytest.approx(expect, rel=1e-10)


def test_energy_examples(la2):
    cfg = SchemeConfig(variant="ym", theta=0.5, dt=0.1)
    ev = Evolution(la2, cfg)
    zero = State(A=la2.zeros("curl"), E=la2.zeros("curl"), lam=None, t=0, n=0)
    assert ev.energy(zero) == (0.0, 0.0)

    def f(p):
        out = np.zeros((len(p), 3, 3))
        out[:, :, 0] = np.array([0.5, -0.25, 1.0])[None, :]
        return out

    e = la2.interpolate_curl(f)
    st = State(A=la2.zeros("curl"), E=e, lam=None, t=0, n=0)
    ee, eb = ev.energy(st)
    assert ee == pytest.approx(0.5 * (0.5**2 + 0.25**2 + 1.0), rel=1e-12)
    assert eb == 0.0
    rng = np.random.default_rng(3)
    st = rand_state(la2, rng, lam=False)
    ee, eb = ev.energy(st)
    assert ee >= 0.0 and eb >= 0.0


def test_interpolate_ics_zero_and_constant(la2):
    cfg = SchemeConfig(variant="ym", theta=1.0, dt=0.1)
    ev = Evolution(la2, cfg)
    zero3 = lambda p: np.zeros((len(p), 3, 3))
    st = ev.interpolate_ics(zero3, zero3)
    assert np.abs(st.A.coeffs).max() == 0.0 and np.abs(st.E.coeffs).max() == 0.0

    ms = ManufacturedSolution()
    st = ev.interpolate_ics(lambda p: ms.potential(0.0, p), zero3)
    # consistency cross-check at a point: A(0, origin) = (0, 1, 0) ox e3
    a = ms.potential(0.0, np.zeros((1, 3)))[0]
    assert np.allclose(a[:, 2], [0, 1, 0]) and np.abs(a[:, :2]).max() == 0.0
    # constant field reproduced by P_curl of the interpolate
    def cfield(p):
        out = np.zeros((len(p), 3, 3))
        out[:, :, 1] = np.array([0.7, -0.2, 0.1])[None, :]
        return out

    sti = ev.interpolate_ics(cfield, zero3)
    for g in la2._cell_groups:
        rec = g.reconstructions(sti.A)
        assert np.abs(rec[:, :, 1] - np.array([0.7, -0.2, 0.1])[None, :]).max() < 1e-12


def test_project_ics_zero_data(la2):
    cfg = SchemeConfig(variant="ym-constrained", theta=1.0, dt=0.1)
    ev = Evolution(la2, cfg)
    zero3 = lambda p: np.zeros((len(p), 3, 3))
    st = ev.project_ics(zero3, zero3)
    assert np.abs(st.E.coeffs).max() <= 1e-14


def test_project_ics_zeroes_constraint(la2):
    ms = ManufacturedSolution()
    cfg = SchemeConfig(variant="ym-constrained", theta=1.0, dt=0.1)
    ev = Evolution(la2, cfg)
    st = ev.project_ics(lambda p: ms.potential(0.0, p), lambda p: ms.electric(0.0, p))
    c = ev.constraint_functional(st.A, st.E)
    scale = max(1.0, np.abs(st.E.coeffs).max())
    assert np.abs(c).max() <= 1e-11 * scale


def test_project_ics_consistency_trend():
    # distance between projected and interpolated E decreases with h
    ms = ManufacturedSolution()
    norms = []
    for n in (2, 4):
        la = LaddrComplex(DdrComplex(build_cubic_mesh(n)), su2())
        ev = Evolution(la, SchemeConfig(variant="ym-constrained", theta=1.0, dt=0.1))
        st = ev.project_ics(
            lambda p: ms.potential(0.0, p), lambda p: ms.electric(0.0, p)
        )
        ie = la.interpolate_curl(lambda p: ms.electric(0.0, p))
        diff = la.field("curl", st.E.flat - ie.flat)
        norms.append(la.norm("curl", diff))
    assert norms[1] < norms[0]


def test_zero_state_fixed_point_all_variants(la2, la1_u1):
    for variant, la in (("maxwell", la1_u1), ("ym", la2), ("ym-constrained", la2)):
        cfg = SchemeConfig(variant=variant, theta=1.0, dt=0.1,
                           newton=NewtonConfig(tolerance=1e-12))
        ev = Evolution(la, cfg)
        st = State(
            A=la.zeros("curl"),
            E=la.zeros("curl"),
            lam=la.zeros("grad") if variant == "ym-constrained" else None,
            t=0.0,
            n=0,
        )
        new, _ = ev.step(st)
        assert np.abs(new.A.coeffs).max() == 0.0
        assert np.abs(new.E.coeffs).max() == 0.0


@pytest.mark.parametrize("theta", [0.5, 1.0])
def test_maxwell_weak_divergence_preserved(theta):
    la = LaddrComplex(DdrComplex(build_cubic_mesh(4)), u1())
    cfg = SchemeConfig(variant="maxwell", theta=theta, dt=0.05)
    ev = Evolution(la, cfg)
    rng = np.random.default_rng(4)
    st = rand_state(la, rng, lam=False)
    c0 = ev.GtM @ st.E.flat
    scale = np.abs(c0).max()
    for _ in range(20):
        st, _ = ev.step(st)
        drift = np.abs(ev.GtM @ st.E.flat - c0).max()
        assert drift <= 1e-11 * scale


def test_constrained_one_step_constraint_drift(la2):
    rng = np.random.default_rng(5)
    cfg = SchemeConfig(variant="ym-constrained", theta=1.0, dt=0.05,
                       newton=NewtonConfig(tolerance=1e-12))
    ev = Evolution(la2, cfg)
    st = rand_state(la2, rng)
    c0 = ev.constraint_functional(st.A, st.E)
    new, rep = ev.step(st)
    c1 = ev.constraint_functional(new.A, new.E)
    scale = max(np.abs(c0).max(), 1.0)
    assert np.abs(c1 - c0).max() <= 10 * 1e-12 * scale
    assert rep.converged


def test_unconstrained_energy_conservation_crank_nicolson(la2):
    rng = np.random.default_rng(6)
    cfg = SchemeConfig(variant="ym", theta=0.5, dt=0.05,
                       newton=NewtonConfig(tolerance=1e-12))
    ev = Evolution(la2, cfg)
    st = rand_state(la2, rng, scale=0.4, lam=False)
    traj, rows = ev.run(st, 10)
    en = [r.energy_E + r.energy_B for r in rows]
    assert max(abs(e - en[0]) for e in en) <= 1e-8 * en[0]


def test_unconstrained_energy_decay_implicit_euler(la2):
    rng = np.random.default_rng(7)
    cfg = SchemeConfig(variant="ym", theta=1.0, dt=0.05,
                       newton=NewtonConfig(tolerance=1e-12))
    ev = Evolution(la2, cfg)
    st = rand_state(la2, rng, scale=0.4, lam=False)
    traj, rows = ev.run(st, 10)
    en = [r.energy_E + r.energy_B for r in rows]
    assert all(en[i + 1] <= en[i] + 1e-12 * en[0] for i in range(len(en) - 1))


def test_constrained_energy_decay_with_projected_ics(la2):
    ms = ManufacturedSolution()
    cfg = SchemeConfig(variant="ym-constrained", theta=1.0, dt=0.1,
                       newton=NewtonConfig(tolerance=1e-12))
    ev = Evolution(la2, cfg)
    st = ev.project_ics(lambda p: ms.potential(0.0, p), lambda p: ms.electric(0.0, p))
    traj, rows = ev.run(st, 10)
    en = [r.energy_E + r.energy_B for r in rows]
    assert all(en[i + 1] <= en[i] + 1e-10 * max(1.0, en[0]) for i in range(len(en) - 1))


def test_constrained_jacobian_matches_fd(la2):
    rng = np.random.default_rng(8)
    cfg = SchemeConfig(variant="ym-constrained", theta=1.0, dt=0.05,
                       newton=NewtonConfig(tolerance=1e-12))
    ev = Evolution(la2, cfg)
    st = rand_state(la2, rng)
    ev._b_old = ev.magnetic_field(st.A).flat
    ev._f2 = np.zeros(ev.n_curl)
    ev._dE_interp = np.zeros(ev.n_curl)
    z = 0.3 * rng.standard_normal(2 * ev.n_curl + ev.n_grad)
    disc = jacobian_fd_check(
        lambda zz: ev._residual_full(zz, st), lambda zz: ev._jacobian(zz, st), z, 1e-6
    )
    assert disc <= 1e-6


def test_min_singular_value_of_constrained_saddle(la2):
    # diagnostic only: the constrained Jacobian may be numerically singular,
    # the estimate is reported without assertion on its size
    from ddrym import estimate_min_singular_value

    rng = np.random.default_rng(20)
    cfg = SchemeConfig(variant="ym-constrained", theta=1.0, dt=0.05,
                       newton=NewtonConfig(tolerance=1e-10))
    ev = Evolution(la2, cfg)
    st = rand_state(la2, rng)
    ev._b_old = ev.magnetic_field(st.A).flat
    ev._f2 = np.zeros(ev.n_curl)
    ev._dE_interp = np.zeros(ev.n_curl)
    z = np.concatenate([st.A.flat, st.E.flat, st.lam.flat])
    jac = ev._jacobian(z, st)
    est = estimate_min_singular_value(jac, maxiter=40)
    assert np.isfinite(est) and est >= 0.0


def test_run_diagnostics_rows(la2):
    cfg = SchemeConfig(variant="ym", theta=1.0, dt=0.1,
                       newton=NewtonConfig(tolerance=1e-10))
    ev = Evolution(la2, cfg)
    rng = np.random.default_rng(9)
    st = rand_state(la2, rng, lam=False)
    traj, rows = ev.run(st, 3)
    assert len(traj) == 4 and len(rows) == 4
    assert rows[0].step == 0 and rows[-1].step == 3
    assert rows[-1].time == pytest.approx(0.3)
    header = DiagnosticsRow.HEADER.split(",")
    csv = rows[1].as_csv().split(",")
    assert len(csv) == len(header)


def test_manufactured_forcing_requires_provider(la2):
    with pytest.raises(ValueError):
        Evolution(la2, SchemeConfig(variant="ym", theta=1.0, dt=0.1,
                                    manufactured_forcing=True))


def test_newton_warm_start_efficiency(la2):
    # desk-scale constrained run: average iterations per step stays small
    ms = ManufacturedSolution()
    cfg = SchemeConfig(variant="ym-constrained", theta=1.0, dt=0.1,
                       newton=NewtonConfig(tolerance=1e-6), manufactured_forcing=True)
    ev = Evolution(la2, cfg, forcing=ManufacturedForcing(la2, ms))
    st = ev.interpolate_ics(lambda p: ms.potential(0.0, p),
                            lambda p: ms.electric(0.0, p))
    st = State(A=st.A, E=st.E, lam=la2.zeros("grad"), t=0.0, n=0)
    traj, rows = ev.run(st, 10)
    iters = [r.newton_iters for r in rows[1:]]
    assert np.mean(iters) <= 4.0
