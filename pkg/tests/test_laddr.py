import numpy as np
import pytest

from ddrym import LaddrComplex, LieField, cell_id, rule, su2, u1


def rand_field(la, space, rng, scale=1.0):
    n = la.ddr.space_size(space)
    return LieField(space, scale * rng.standard_normal((n, la.algebra.dim)))


def const_field(vec, alg_axis, dim):
    def f(p):
        out = np.zeros((len(p), 3, dim))
        out[:, :, alg_axis] = np.asarray(vec)[None, :]
        return out

    return f


def test_lifted_complex_property(laddr2):
    rng = np.random.default_rng(0)
    q = rand_field(laddr2, "grad", rng)
    cg = laddr2.curl(laddr2.gradient(q))
    assert np.abs(cg.coeffs).max() <= 1e-13 * max(1.0, np.abs(q.coeffs).max())
    v = rand_field(laddr2, "curl", rng)
    dc = laddr2.divergence(laddr2.curl(v))
    assert np.abs(dc.coeffs).max() <= 1e-12 * max(1.0, np.abs(v.coeffs).max())


def test_lift_of_constant_gradient_vanishes(laddr2):
    q = LieField("grad", np.tile([1.0, -2.0, 0.5], (laddr2.mesh.n_vertices, 1)))
    assert np.abs(laddr2.gradient(q).coeffs).max() <= 1e-14


def test_lift_reduces_to_scalar_for_dim1(ddr2):
    la = LaddrComplex(ddr2, u1())
    rng = np.random.default_rng(1)
    q = rng.standard_normal(ddr2.mesh.n_vertices)
    lifted = la.gradient(LieField("grad", q[:, None]))
    assert np.allclose(lifted.coeffs[:, 0], ddr2.discrete_gradient(q))


def test_lift_operator_matrix(laddr2):
    lifted = laddr2.lift(laddr2.ddr.gradient_matrix)
    assert (lifted - laddr2.gradient_matrix).nnz == 0


def test_la_inner_orthogonal_algebra_axes(laddr2):
    rng = np.random.default_rng(2)
    mu = laddr2.zeros("curl")
    zeta = laddr2.zeros("curl")
    mu.coeffs[:, 0] = rng.standard_normal(laddr2.mesh.n_edges)
    zeta.coeffs[:, 1] = rng.standard_normal(laddr2.mesh.n_edges)
    assert laddr2.la_inner("curl", mu, zeta) == 0.0


def test_la_inner_constant_value(laddr2):
    c = np.array([0.4, -1.1, 0.3])
    mu = laddr2.interpolate_curl(const_field(c, 0, 3))
    assert laddr2.la_inner("curl", mu, mu) == pytest.approx(c @ c, rel=1e-12)


def test_la_inner_bilinear(laddr2):
    rng = np.random.default_rng(3)
    a, b = rng.standard_normal(2)
    u = rand_field(laddr2, "curl", rng)
    v = rand_field(laddr2, "curl", rng)
    w = rand_field(laddr2, "curl", rng)
    lhs = laddr2.la_inner("curl", LieField("curl", a * u.coeffs + b * v.coeffs), w)
    rhs = a * laddr2.la_inner("curl", u, w) + b * laddr2.la_inner("curl", v, w)
    assert lhs == pytest.approx(rhs, rel=1e-13, abs=1e-13)


def test_la_inner_size_mismatch(laddr2):
    with pytest.raises(ValueError):
        laddr2.la_inner("curl", laddr2.zeros("curl"), laddr2.zeros("grad"))


def test_bracket_abelian_zero(ddr2):
    la = LaddrComplex(ddr2, u1())
    rng = np.random.default_rng(4)
    v = rand_field(la, "curl", rng)
    assert np.abs(la.bracket_curl_curl(v, v).coeffs).max() == 0.0


def test_bracket_constant_consistency(laddr2):
    v = laddr2.interpolate_curl(const_field([1, 0, 0], 0, 3))
    w = laddr2.interpolate_curl(const_field([0, 1, 0], 1, 3))
    br = laddr2.bracket_curl_curl(v, w)
    m = laddr2.mesh
    for fi in range(m.n_faces):
        expect = np.zeros(3)
        expect[2] = np.cross([1, 0, 0], [0, 1, 0]) @ m.face_normal[fi]
        assert np.abs(br.coeffs[fi] - expect).max() <= 1e-12


def test_bracket_general_constant_consistency(laddr2):
    rng = np.random.default_rng(5)
    a, b = rng.standard_normal((2, 3))
    v = laddr2.interpolate_curl(const_field(a, 0, 3))
    w = laddr2.interpolate_curl(const_field(b, 1, 3))
    br = laddr2.bracket_curl_curl(v, w)
    m = laddr2.mesh
    for fi in range(0, m.n_faces, 5):
        expect = (np.cross(a, b) @ m.face_normal[fi]) * np.array([0.0, 0.0, 1.0])
        assert np.abs(br.coeffs[fi] - expect).max() <= 1e-12


def test_bracket_exact_symmetry(laddr2):
    rng = np.random.default_rng(6)
    v = rand_field(laddr2, "curl", rng)
    w = rand_field(laddr2, "curl", rng)
    b1 = laddr2.bracket_curl_curl(v, w)
    b2 = laddr2.bracket_curl_curl(w, v)
    assert np.array_equal(b1.coeffs, b2.coeffs)


def test_bracket_bilinear(laddr2):
    rng = np.random.default_rng(7)
    u = rand_field(laddr2, "curl", rng)
    v = rand_field(laddr2, "curl", rng)
    w = rand_field(laddr2, "curl", rng)
    a, b = rng.standard_normal(2)
    lhs = laddr2.bracket_curl_curl(LieField("curl", a * u.coeffs + b * v.coeffs), w)
    rhs = (
        a * laddr2.bracket_curl_curl(u, w).coeffs
        + b * laddr2.bracket_curl_curl(v, w).coeffs
    )
    assert np.abs(lhs.coeffs - rhs).max() <= 1e-12


def test_volume_bracket_same_argument_exact_zero(laddr2):
    rng = np.random.default_rng(8)
    for _ in range(50):
        v = rand_field(laddr2, "curl", rng)
        q = rand_field(laddr2, "grad", rng)
        assert laddr2.bracket_volume_integral(v, v, q) == 0.0


def test_volume_bracket_abelian_zero(ddr2):
    la = LaddrComplex(ddr2, u1())
    rng = np.random.default_rng(9)
    v = rand_field(la, "curl", rng)
    w = rand_field(la, "curl", rng)
    q = rand_field(la, "grad", rng)
    assert la.bracket_volume_integral(v, w, q) == 0.0


def test_volume_bracket_dense_oracle(laddr2):
    # independent dense evaluation by quadrature, both Ad-invariance
    # arrangements
    la = laddr2
    dc = la.ddr
    m = la.mesh
    alg = la.algebra
    rng = np.random.default_rng(10)
    v = rand_field(la, "curl", rng)
    w = rand_field(la, "curl", rng)
    q = rand_field(la, "grad", rng)

    tot_a = 0.0  # <Pv, [Pw, Pq]>
    tot_b = 0.0  # <[Pv, Pw], Pq>
    for co in dc.cell_ops:
        qr = rule(m, cell_id(co.index), 2)
        pv = co.pcurl @ v.coeffs[co.edges]
        pw = co.pcurl @ w.coeffs[co.edges]
        pq = co.basis.eval(qr.points) @ (co.pgrad @ q.coeffs[co.vertices])
        br = np.einsum("qk,jkl->qjl", pq, alg.structure)
        tot_a += qr.weights @ np.einsum("mi,mj,qjl,il->q", pv, pw, br, alg.metric)
        comm = np.einsum("mi,mj,ijl->ml", pv, pw, alg.structure)
        tot_b += qr.weights @ np.einsum("ml,qk,lk->q", comm, pq, alg.metric)
    val = la.bracket_volume_integral(v, w, q)
    assert val == pytest.approx(tot_a, abs=1e-13 * max(1, abs(val)))
    # Ad-invariance: <Pv, [Pw, Pq]> = <[Pv, Pw], Pq>
    assert tot_a == pytest.approx(tot_b, abs=1e-13 * max(1, abs(tot_a)))


def test_volume_bracket_trilinear(laddr2):
    rng = np.random.default_rng(11)
    v = rand_field(laddr2, "curl", rng)
    w1 = rand_field(laddr2, "curl", rng)
    w2 = rand_field(laddr2, "curl", rng)
    q = rand_field(laddr2, "grad", rng)
    a, b = rng.standard_normal(2)
    lhs = laddr2.bracket_volume_integral(
        v, LieField("curl", a * w1.coeffs + b * w2.coeffs), q
    )
    rhs = a * laddr2.bracket_volume_integral(v, w1, q) + b * laddr2.bracket_volume_integral(
        v, w2, q
    )
    assert lhs == pytest.approx(rhs, abs=1e-12 * max(1.0, abs(lhs)))


def test_assembly_helpers_match_primitives(laddr2):
    la = laddr2
    rng = np.random.default_rng(12)
    v = rand_field(la, "curl", rng)
    w = rand_field(la, "curl", rng)
    a = rand_field(la, "curl", rng)
    q = rand_field(la, "grad", rng)
    assert np.abs(
        la.face_bracket_matrix(v) @ w.flat - la.bracket_curl_curl(v, w).flat
    ).max() <= 1e-13
    y = rng.standard_normal(la.size("div"))
    lhs = y @ la.bracket_curl_curl(v, w).flat
    assert lhs == pytest.approx(
        v.flat @ (la.face_bracket_weighted_jacobian(y) @ w.flat), abs=1e-12
    )
    vol = la.bracket_volume_integral(v, a, q)
    assert v.flat @ (la.volume_coupling_matrix(a) @ q.flat) == pytest.approx(vol, abs=1e-12)
    assert la.volume_bracket_test_curl(a, q) @ v.flat == pytest.approx(vol, abs=1e-12)
    assert la.volume_bracket_test_grad(v, a) @ q.flat == pytest.approx(vol, abs=1e-12)
    assert v.flat @ (la.volume_coupling_wrt_a(q) @ a.flat) == pytest.approx(vol, abs=1e-12)
    assert q.flat @ (la.volume_coupling_wrt_a_grad_test(v) @ a.flat) == pytest.approx(
        vol, abs=1e-12
    )


def test_laddr_on_tet_mesh(ddr_tet):
    la = LaddrComplex(ddr_tet, su2())
    rng = np.random.default_rng(13)
    v = rand_field(la, "curl", rng)
    w = rand_field(la, "curl", rng)
    q = rand_field(la, "grad", rng)
    assert np.array_equal(
        la.bracket_curl_curl(v, w).coeffs, la.bracket_curl_curl(w, v).coeffs
    )
    assert la.bracket_volume_integral(v, v, q) == 0.0
    cg = la.curl(la.gradient(q))
    assert np.abs(cg.coeffs).max() <= 1e-12 * max(1.0, np.abs(q.coeffs).max())
