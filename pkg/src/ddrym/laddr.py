"""Lie-algebra-valued DDR complex: lifted operators, inner products, brackets.

A Lie-algebra-valued dof vector stores one algebra coefficient tuple per
entity, shape (n_entities, dim).  The flat layout is entity-major: global
dof = entity_index * dim + I, so lifted operators are Kronecker products of
the scalar operators with the identity on the algebra, and the Gram matrices
are Kronecker products with the algebra metric.

Two discrete brackets are provided.  The face bracket maps two curl-space
vectors to a div-space vector through the tangential traces; it is bilinear,
exactly symmetric (the contraction runs over ordered algebra pairs of
exactly antisymmetrised tensors), and vanishes for abelian algebras.  The
volume bracket integrates <P_curl v, [P_curl w, P_grad q]> cell by cell with
exact quadrature; it vanishes exactly, in floating point, when the two
curl-space arguments coincide.

Faces and cells are grouped by local entity counts so every bracket and
coupling assembles in a few batched contractions per group.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps

from .ddr import DdrComplex
from .lie import LieAlgebra


@dataclass
class LieField:
    """Coefficients of a Lie-algebra-valued dof vector, shape (n, dim)."""

    space: str
    coeffs: np.ndarray

    @property
    def flat(self) -> np.ndarray:
        return self.coeffs.reshape(-1)

    def copy(self) -> "LieField":
        return LieField(self.space, self.coeffs.copy())


class _FaceGroup:
    """Faces with the same edge count, stacked for batched contractions."""

    def __init__(self, la, face_indices):
        ddr = la.ddr
        d = la.algebra.dim
        self.faces = np.array(face_indices, dtype=int)
        ops = [ddr.face_ops[f] for f in face_indices]
        self.edges = np.stack([fo.edges for fo in ops])  # (nf, ne)
        self.gamma = np.stack([fo.gamma for fo in ops])  # (nf, 3, ne)
        self.normal = ddr.mesh.face_normal[self.faces]  # (nf, 3)
        ne = self.edges.shape[1]
        edofs = self.edges[:, :, None] * d + np.arange(d)[None, None, :]
        self.edge_dofs = edofs.reshape(len(ops), ne * d)
        fdofs = self.faces[:, None] * d + np.arange(d)[None, :]
        self.face_dofs = fdofs
        # index arrays for (face_dof x edge_dof) and (edge_dof x edge_dof) blocks
        self.rows_fe = np.repeat(self.face_dofs, ne * d, axis=1).ravel()
        self.cols_fe = np.tile(self.edge_dofs, (1, d)).ravel()
        self.rows_ee = np.repeat(self.edge_dofs, ne * d, axis=1).ravel()
        self.cols_ee = np.tile(self.edge_dofs, (1, ne * d)).ravel()

    def traces(self, field: LieField) -> np.ndarray:
        """Tangential traces, (nf, 3, dim)."""
        return np.einsum("fce,fed->fcd", self.gamma, field.coeffs[self.edges])


class _CellGroup:
    """Cells with the same edge/vertex counts, stacked for contractions."""

    def __init__(self, la, cell_indices):
        ddr = la.ddr
        d = la.algebra.dim
        self.cells = np.array(cell_indices, dtype=int)
        ops = [ddr.cell_ops[c] for c in cell_indices]
        self.edges = np.stack([co.edges for co in ops])  # (nt, ne)
        self.vertices = np.stack([co.vertices for co in ops])  # (nt, nv)
        self.pcurl = np.stack([co.pcurl for co in ops])  # (nt, 3, ne)
        self.int_pgrad = np.stack([co.int_pgrad for co in ops])  # (nt, nv)
        self.pmat = np.einsum("fme,fmg->feg", self.pcurl, self.pcurl)
        nt, ne = self.edges.shape
        nv = self.vertices.shape[1]
        self.edge_dofs = (
            self.edges[:, :, None] * d + np.arange(d)[None, None, :]
        ).reshape(nt, ne * d)
        self.vertex_dofs = (
            self.vertices[:, :, None] * d + np.arange(d)[None, None, :]
        ).reshape(nt, nv * d)
        self.rows_ev = np.repeat(self.edge_dofs, nv * d, axis=1).ravel()
        self.cols_ev = np.tile(self.vertex_dofs, (1, ne * d)).ravel()
        self.rows_ee = np.repeat(self.edge_dofs, ne * d, axis=1).ravel()
        self.cols_ee = np.tile(self.edge_dofs, (1, ne * d)).ravel()
        self.rows_ve = np.repeat(self.vertex_dofs, ne * d, axis=1).ravel()
        self.cols_ve = np.tile(self.edge_dofs, (1, nv * d)).ravel()

    def reconstructions(self, field: LieField) -> np.ndarray:
        """Constant curl-space potentials, (nt, 3, dim)."""
        return np.einsum("fme,fed->fmd", self.pcurl, field.coeffs[self.edges])

    def grad_integrals(self, field: LieField) -> np.ndarray:
        """Integrated scalar potentials, (nt, dim)."""
        return np.einsum("fv,fvd->fd", self.int_pgrad, field.coeffs[self.vertices])


class LaddrComplex:
    """Tensorisation of a scalar DDR complex with a Lie algebra."""

    def __init__(self, ddr: DdrComplex, algebra: LieAlgebra):
        self.ddr = ddr
        self.algebra = algebra
        self.mesh = ddr.mesh
        d = algebra.dim
        eye = sps.identity(d, format="csr")
        self.gradient_matrix = sps.kron(ddr.gradient_matrix, eye, format="csr")
        self.curl_matrix = sps.kron(ddr.curl_matrix, eye, format="csr")
        self.divergence_matrix = sps.kron(ddr.divergence_matrix, eye, format="csr")
        self.gram_grad = sps.kron(ddr.gram_grad, algebra.metric, format="csr")
        self.gram_curl = sps.kron(ddr.gram_curl, algebra.metric, format="csr")
        self.gram_div = sps.kron(ddr.gram_div, algebra.metric, format="csr")

        by_ne = {}
        for fi, fo in enumerate(ddr.face_ops):
            by_ne.setdefault(len(fo.edges), []).append(fi)
        self._face_groups = [_FaceGroup(self, idx) for idx in by_ne.values()]
        by_shape = {}
        for ci, co in enumerate(ddr.cell_ops):
            by_shape.setdefault((len(co.edges), len(co.vertices)), []).append(ci)
        self._cell_groups = [_CellGroup(self, idx) for idx in by_shape.values()]

    # -- dof helpers ---------------------------------------------------------

    def size(self, space: str) -> int:
        return self.ddr.space_size(space) * self.algebra.dim

    def zeros(self, space: str) -> LieField:
        return LieField(space, np.zeros((self.ddr.space_size(space), self.algebra.dim)))

    def field(self, space: str, flat: np.ndarray) -> LieField:
        return LieField(space, np.asarray(flat).reshape(-1, self.algebra.dim))

    def gram(self, space: str) -> sps.csr_matrix:
        return {"grad": self.gram_grad, "curl": self.gram_curl, "div": self.gram_div}[
            space
        ]

    def lift(self, op: sps.spmatrix) -> sps.csr_matrix:
        """Lift a scalar DDR operator to the algebra-valued spaces."""
        return sps.kron(op, sps.identity(self.algebra.dim), format="csr")

    def gradient(self, q: LieField) -> LieField:
        return self.field("curl", self.gradient_matrix @ q.flat)

    def curl(self, v: LieField) -> LieField:
        return self.field("div", self.curl_matrix @ v.flat)

    def divergence(self, w: LieField) -> LieField:
        d = self.algebra.dim
        out = self.divergence_matrix @ w.flat
        return LieField("cellwise", out.reshape(-1, d))

    def la_inner(self, space: str, mu: LieField, zeta: LieField) -> float:
        if mu.coeffs.shape != zeta.coeffs.shape:
            raise ValueError("dof vector sizes do not match")
        return float(mu.flat @ (self.gram(space) @ zeta.flat))

    def norm(self, space: str, mu: LieField) -> float:
        return float(np.sqrt(max(self.la_inner(space, mu, mu), 0.0)))

    # -- interpolators -------------------------------------------------------

    def interpolate_curl(self, field, degree: int = None) -> LieField:
        """Interpolate a callable mapping (n, 3) points to (n, 3, dim) values."""
        from .ddr import INTERP_DEGREE, _edge_batch_points

        deg = INTERP_DEGREE if degree is None else degree
        pts, w = _edge_batch_points(self.mesh, deg)
        ne, nq = pts.shape[:2]
        vals = np.asarray(field(pts.reshape(-1, 3))).reshape(ne, nq, 3, self.algebra.dim)
        out = np.einsum("q,eqcd,ec->ed", w, vals, self.mesh.edge_tangent)
        return LieField("curl", out)

    def interpolate_grad(self, field) -> LieField:
        vals = np.asarray(field(self.mesh.vertices))
        return LieField("grad", vals)

    # -- discrete brackets -----------------------------------------------------

    def bracket_curl_curl(self, v: LieField, w: LieField) -> LieField:
        """Face-wise bracket of two curl-space vectors, valued in the div space."""
        if v.coeffs.shape != w.coeffs.shape:
            raise ValueError("dof vector sizes do not match")
        d = self.algebra.dim
        c = self.algebra.structure
        out = np.zeros((self.mesh.n_faces, d))
        for g in self._face_groups:
            t = g.traces(v)
            s = g.traces(w)
            acc = np.zeros((len(g.faces), d))
            for i in range(d):
                for j in range(i + 1, d):
                    val = np.einsum(
                        "fc,fc->f",
                        np.cross(t[:, :, i], s[:, :, j]) - np.cross(t[:, :, j], s[:, :, i]),
                        g.normal,
                    )
                    acc += val[:, None] * c[i, j]
            out[g.faces] = acc
        return LieField("div", out)

    def bracket_volume_integral(self, v: LieField, w: LieField, q: LieField) -> float:
        """Integral of <P_curl v, [P_curl w, P_grad q]> over the mesh.

        Vanishes exactly when v and w carry identical coefficients, by the
        ordered-pair contraction against the totally antisymmetric triple
        product of the algebra.
        """
        tri = self.algebra.triple
        d = self.algebra.dim
        total = 0.0
        for g in self._cell_groups:
            u = g.reconstructions(v)
            uw = g.reconstructions(w)
            s = np.einsum("fmi,fmj->fij", u, uw)
            p = np.einsum("ijk,fk->fij", tri, g.grad_integrals(q))
            for i in range(d):
                for j in range(i + 1, d):
                    total += float(np.sum((s[:, i, j] - s[:, j, i]) * p[:, i, j]))
        return total

    # -- assembly helpers for the schemes ---------------------------------------

    def face_bracket_matrix(self, u: LieField) -> sps.csr_matrix:
        """Sparse matrix of v |-> bracket_curl_curl(u, v)."""
        d = self.algebra.dim
        c = self.algebra.structure
        nr = self.mesh.n_faces * d
        nc = self.mesh.n_edges * d
        rows, cols, vals = [], [], []
        for g in self._face_groups:
            t = g.traces(u).transpose(0, 2, 1)  # (nf, d, 3)
            gg = g.gamma.transpose(0, 2, 1)  # (nf, ne, 3)
            # blk[f, K, (e2, J)] = sum_I ((t_I x gamma_e2) . n) c[I, J, K]
            txg = np.cross(t[:, None, :, :], gg[:, :, None, :])  # (nf, ne, d, 3)
            cross_n = np.einsum("feic,fc->fei", txg, g.normal)  # (nf, ne, I)
            blk = np.einsum("fei,ijk->fkej", cross_n, c)
            rows.append(g.rows_fe)
            cols.append(g.cols_fe)
            vals.append(blk.reshape(len(g.faces), -1).ravel())
        return sps.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(nr, nc),
        )

    def face_bracket_weighted_jacobian(self, y: np.ndarray) -> sps.csr_matrix:
        """Matrix J with du^T J v = y . bracket(du, v), for a div-space weight y."""
        d = self.algebra.dim
        c = self.algebra.structure
        n = self.mesh.n_edges * d
        yc = np.asarray(y).reshape(-1, d)
        rows, cols, vals = [], [], []
        for g in self._face_groups:
            w = yc[g.faces]  # (nf, d)
            gg = g.gamma.transpose(0, 2, 1)  # (nf, ne, 3)
            # cross tensor (gamma_e1 x gamma_e2) . n, (nf, ne, ne)
            gxg = np.cross(gg[:, :, None, :], gg[:, None, :, :])
            cross = np.einsum("fabc,fc->fab", gxg, g.normal)
            pk = np.einsum("ijk,fk->fij", c, w)
            blk = np.einsum("fab,fij->faibj", cross, pk)
            rows.append(g.rows_ee)
            cols.append(g.cols_ee)
            ned = g.edge_dofs.shape[1]
            vals.append(blk.reshape(len(g.faces), ned, ned).ravel())
        return sps.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n),
        )

    def volume_coupling_matrix(self, a: LieField) -> sps.csr_matrix:
        """Matrix K with v^T K q = integral <[P_curl a, P_grad q], P_curl v>."""
        d = self.algebra.dim
        tri = self.algebra.triple
        nr = self.mesh.n_edges * d
        nc = self.mesh.n_vertices * d
        rows, cols, vals = [], [], []
        for g in self._cell_groups:
            pa = np.einsum("feg,fgj->fej", g.pmat, a.coeffs[g.edges])
            g1 = np.einsum("fej,ijk->feik", pa, tri)
            blk = np.einsum("feik,fv->feivk", g1, g.int_pgrad)
            rows.append(g.rows_ev)
            cols.append(g.cols_ev)
            ned = g.edge_dofs.shape[1]
            nvd = g.vertex_dofs.shape[1]
            vals.append(blk.reshape(len(g.cells), ned, nvd).ravel())
        return sps.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(nr, nc),
        )

    def volume_coupling_wrt_a(self, l: LieField) -> sps.csr_matrix:
        """Matrix of (v, da) |-> integral <[P_curl da, P_grad l], P_curl v>."""
        d = self.algebra.dim
        tri = self.algebra.triple
        n = self.mesh.n_edges * d
        rows, cols, vals = [], [], []
        for g in self._cell_groups:
            p = np.einsum("ijk,fk->fij", tri, g.grad_integrals(l))
            blk = np.einsum("feg,fij->feigj", g.pmat, p)
            rows.append(g.rows_ee)
            cols.append(g.cols_ee)
            ned = g.edge_dofs.shape[1]
            vals.append(blk.reshape(len(g.cells), ned, ned).ravel())
        return sps.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n),
        )

    def volume_bracket_test_curl(self, a: LieField, l: LieField) -> np.ndarray:
        """Vector r with r . v = integral <[P_curl a, P_grad l], P_curl v>."""
        d = self.algebra.dim
        tri = self.algebra.triple
        out = np.zeros((self.mesh.n_edges, d))
        for g in self._cell_groups:
            ua = g.reconstructions(a)
            p = np.einsum("ijk,fk->fij", tri, g.grad_integrals(l))
            contrib = np.einsum("fme,fmj,fij->fei", g.pcurl, ua, p)
            np.add.at(out, g.edges.ravel(), contrib.reshape(-1, d))
        return out.reshape(-1)

    def volume_bracket_test_grad(self, u: LieField, a: LieField) -> np.ndarray:
        """Vector r with r . q = integral <P_curl u, [P_curl a, P_grad q]>."""
        d = self.algebra.dim
        tri = self.algebra.triple
        out = np.zeros((self.mesh.n_vertices, d))
        for g in self._cell_groups:
            s = np.einsum("fmi,fmj->fij", g.reconstructions(u), g.reconstructions(a))
            w = np.einsum("fij,ijk->fk", s, tri)
            contrib = np.einsum("fv,fk->fvk", g.int_pgrad, w)
            np.add.at(out, g.vertices.ravel(), contrib.reshape(-1, d))
        return out.reshape(-1)

    def volume_coupling_wrt_a_grad_test(self, w: LieField) -> sps.csr_matrix:
        """Matrix of (q, da) |-> integral <P_curl w, [P_curl da, P_grad q]>."""
        d = self.algebra.dim
        tri = self.algebra.triple
        nr = self.mesh.n_vertices * d
        nc = self.mesh.n_edges * d
        rows, cols, vals = [], [], []
        for g in self._cell_groups:
            pw = np.einsum("feg,fgi->fei", g.pmat, w.coeffs[g.edges])
            gg = np.einsum("fei,ijk->fekj", pw, tri)
            blk = np.einsum("fv,fekj->fvkej", g.int_pgrad, gg)
            rows.append(g.rows_ve)
            cols.append(g.cols_ve)
            ned = g.edge_dofs.shape[1]
            nvd = g.vertex_dofs.shape[1]
            vals.append(blk.reshape(len(g.cells), nvd, ned).ravel())
        return sps.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(nr, nc),
        )
