"""Lowest-order scalar discrete de Rham complex on a polyhedral mesh.

Degrees of freedom: one value per vertex (grad space), one tangential moment
per edge (curl space), one normal flux per face (div space).  The module
builds, per face and per cell, the potential reconstructions defined by
integration-by-parts identities, the stabilisation bilinear forms completing
the discrete L2-like inner products, and the global sparse operators
(gradient, curl, divergence) and Gram matrices.

The face curl is scaled by the face area, C_F v = -(1/|F|) sum omega |E| v_E,
so that it maps edge tangential means to face normal means (Stokes
consistency with the element divergence).
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from .mesh import EntityId, Mesh, edge_id, face_id
from .quadrature import MonomialBasis, QuadratureRule, rule

INTERP_DEGREE = 8
BUILD_DEGREE_FACE = 3
BUILD_DEGREE_CELL = 2
BUILD_DEGREE_EDGE = 3


@dataclass
class FaceOperators:
    """Per-face reconstruction matrices acting on local dof vectors.

    Local vertex dofs follow the face loop; local edge dofs follow the loop
    edges.  ``trf`` holds P1(F) coefficients in ``basis``; ``cgf`` and
    ``gamma`` are constant in-plane vectors.
    """

    index: int
    vertices: np.ndarray
    edges: np.ndarray
    omega: np.ndarray
    basis: MonomialBasis
    cgf: np.ndarray  # (3, nV)
    trf: np.ndarray  # (3, nV)
    int_tr: np.ndarray  # (nV,) integral of trF over the face
    gamma: np.ndarray  # (3, nE)
    cf: np.ndarray  # (nE,) face-curl row
    quad: QuadratureRule = field(repr=False, default=None)


@dataclass
class CellOperatorCache:
    """Per-cell potential reconstructions, stabilisations and Gram blocks."""

    index: int
    vertices: np.ndarray
    edges: np.ndarray
    faces: np.ndarray
    omega: np.ndarray
    basis: MonomialBasis
    cgt: np.ndarray  # (3, nV)
    pgrad: np.ndarray  # (4, nV) P1(T) coefficients
    int_pgrad: np.ndarray  # (nV,) integral of P_grad over the cell
    cct: np.ndarray  # (3, nE)
    pcurl: np.ndarray  # (3, nE)
    pdiv: np.ndarray  # (3, nF)
    drow: np.ndarray  # (nF,) element-divergence row
    s_grad: np.ndarray
    s_curl: np.ndarray
    s_div: np.ndarray
    m_grad: np.ndarray  # consistency + stabilisation Gram blocks
    m_curl: np.ndarray
    m_div: np.ndarray


def _local_index(globals_sorted: np.ndarray, ids: np.ndarray) -> np.ndarray:
    return np.searchsorted(globals_sorted, ids)


def _edge_batch_points(mesh: Mesh, degree: int):
    """Gauss points on every edge at once: (n_edges, nq, 3) and unit weights."""
    x, w = np.polynomial.legendre.leggauss(max(1, (degree + 2) // 2))
    s = 0.5 * (x + 1.0)
    lo = mesh.vertices[mesh.edges[:, 0]]
    hi = mesh.vertices[mesh.edges[:, 1]]
    pts = lo[:, None, :] + s[None, :, None] * (hi - lo)[:, None, :]
    return pts, 0.5 * w


class DdrComplex:
    """Scalar DDR complex: operators, potentials and inner products.

    Construction precomputes all face/cell caches; the object is immutable
    afterwards and safe for concurrent reads.
    """

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self.face_ops = [self._build_face(fi) for fi in range(mesh.n_faces)]
        self.cell_ops = [self._build_cell(ci) for ci in range(mesh.n_cells)]
        self._assemble_operators()
        self._assemble_grams()

    # -- face-level reconstructions ----------------------------------------

    def _build_face(self, fi: int) -> FaceOperators:
        mesh = self.mesh
        loop = mesh.faces[fi]
        edges = mesh.face_edges[fi]
        omega = mesh.face_edge_orientation[fi]
        nfe = mesh.face_edge_normals[fi]
        area = mesh.face_area[fi]
        normal = mesh.face_normal[fi]
        nv = len(loop)
        ne = len(edges)
        fb = MonomialBasis(mesh, face_id(fi), 1)
        fq = rule(mesh, face_id(fi), BUILD_DEGREE_FACE)

        # Edge rules and the linear shape functions of the grad dofs.
        edge_rules = []
        edge_shape = []  # (nq, 2) weights of the (lo, hi) endpoint values
        edge_lv = []  # local vertex indices of (lo, hi)
        for k, e in enumerate(edges):
            er = rule(mesh, edge_id(e), BUILD_DEGREE_EDGE)
            lo, hi = mesh.edges[e]
            tangent = mesh.edge_tangent[e]
            s = (er.points - mesh.vertices[lo]) @ tangent / mesh.edge_length[e]
            edge_rules.append(er)
            edge_shape.append(np.column_stack([1.0 - s, s]))
            edge_lv.append(
                (int(np.nonzero(loop == lo)[0][0]), int(np.nonzero(loop == hi)[0][0]))
            )

        # Face gradient: cgf q = (1/|F|) sum omega |E| mean_E(q) n_FE.
        cgf = np.zeros((3, nv))
        for k in range(nv):
            le = mesh.edge_length[edges[k]]
            a, b = edge_lv[k]
            cgf[:, a] += omega[k] * le * 0.5 * nfe[k] / area
            cgf[:, b] += omega[k] * le * 0.5 * nfe[k] / area

        # Scalar trace: solve the divergence-identity system over Rc2(F).
        mono = fb.eval(fq.points)  # (nq, 3)
        grad = fb.eval_grad(fq.points)  # (nq, 3, 3)
        offset = fq.points - fb.center
        vdiv = 2.0 * mono + np.einsum("qc,qjc->qj", offset, grad)  # div_F of v_j
        amat = np.einsum("q,qi,qj->ji", fq.weights, mono, vdiv)  # A[i,j]=int m_j div v_i
        vint = np.einsum("q,qi,qc->ic", fq.weights, mono, offset)  # int (x-x_F) m_i
        rhs = -vint @ cgf
        for k in range(ne):
            er, shape = edge_rules[k], edge_shape[k]
            a, b = edge_lv[k]
            vdotn = (
                fb.eval(er.points) * ((er.points - fb.center) @ nfe[k])[:, None]
            )  # (nq, 3): v_i . n_FE
            blk = omega[k] * np.einsum("q,qi,qm->im", er.weights, vdotn, shape)
            rhs[:, a] += blk[:, 0]
            rhs[:, b] += blk[:, 1]
        trf = np.linalg.solve(amat, rhs)
        int_m = fq.weights @ mono
        int_tr = int_m @ trf

        # Tangential trace over the zero-mean linear test functions.
        means = int_m[1:] / area
        cf = -omega * mesh.edge_length[edges] / area
        lhs = np.zeros((2, 2))
        for k in range(2):
            vrot = np.cross(fb.frame[k] / fb.scale, normal)
            lhs[k] = fb.frame @ vrot
        rmat = np.zeros((2, ne))
        int_r = int_m[1:] - means * area  # integral of r_k over F (near zero)
        for k in range(ne):
            er = edge_rules[k]
            redge = fb.eval(er.points)[:, 1:] - means[None, :]
            rmat[:, k] += omega[k] * (er.weights @ redge) / area
        rmat += np.outer(int_r, cf) / area  # face-curl fidelity term
        gamma = fb.frame.T @ np.linalg.solve(lhs, rmat)

        return FaceOperators(
            index=fi,
            vertices=loop,
            edges=edges,
            omega=omega,
            basis=fb,
            cgf=cgf,
            trf=trf,
            int_tr=int_tr,
            gamma=gamma,
            cf=cf,
            quad=fq,
        )

    # -- cell-level reconstructions ----------------------------------------

    def _build_cell(self, ci: int) -> CellOperatorCache:
        mesh = self.mesh
        cv = mesh.cell_vertices[ci]
        ce = mesh.cell_edges[ci]
        cf_ids = mesh.cells[ci]
        omega = mesh.cell_face_orientation[ci]
        vol = mesh.cell_volume[ci]
        nv, ne, nf = len(cv), len(ce), len(cf_ids)
        cb = MonomialBasis(mesh, EntityId("cell", ci), 1)
        cq = rule(mesh, EntityId("cell", ci), BUILD_DEGREE_CELL)
        h_t = mesh.cell_diameter[ci]

        mono = cb.eval(cq.points)  # (nq, 4)
        grad = cb.eval_grad(cq.points)
        offset = cq.points - cb.center
        int_m = cq.weights @ mono
        means = int_m[1:] / vol

        # Element gradient from the face-trace integrals.
        cgt = np.zeros((3, nv))
        fv_maps = []
        for k, fi in enumerate(cf_ids):
            fo = self.face_ops[fi]
            fmap = _local_index(cv, fo.vertices)
            fv_maps.append(fmap)
            cgt[:, fmap] += omega[k] * np.outer(mesh.face_normal[fi], fo.int_tr) / vol

        # Scalar potential over Rc2(T).
        vdiv = 3.0 * mono + np.einsum("qc,qjc->qj", offset, grad)
        amat = np.einsum("q,qi,qj->ji", cq.weights, mono, vdiv)
        vint = np.einsum("q,qi,qc->ic", cq.weights, mono, offset)
        rhs = -vint @ cgt
        for k, fi in enumerate(cf_ids):
            fo = self.face_ops[fi]
            fq = fo.quad
            tr_vals = fo.basis.eval(fq.points) @ fo.trf  # (nq, nVF)
            vdotn = cb.eval(fq.points) * (
                (fq.points - cb.center) @ mesh.face_normal[fi]
            )[:, None]
            blk = omega[k] * np.einsum("q,qi,qm->im", fq.weights, vdotn, tr_vals)
            rhs[:, fv_maps[k]] += blk
        pgrad = np.linalg.solve(amat, rhs)
        int_pgrad = int_m @ pgrad

        # Element curl from the tangential traces.
        cct = np.zeros((3, ne))
        fe_maps = []
        for k, fi in enumerate(cf_ids):
            fo = self.face_ops[fi]
            emap = _local_index(ce, fo.edges)
            fe_maps.append(emap)
            blk = np.cross(mesh.face_normal[fi][None, :], fo.gamma.T).T  # n_F x gamma
            cct[:, emap] += omega[k] * mesh.face_area[fi] * blk / vol

        # Vector potential on the curl space over Gc1(T); curl((x-x_T)xc)=-2c.
        int_off = cq.weights @ offset  # integral of x - x_T
        rhs_c = np.zeros((3, ne))
        for c in range(3):
            ec = np.eye(3)[c]
            rhs_c[c] = np.cross(int_off, ec) @ cct / vol
            for k, fi in enumerate(cf_ids):
                fo = self.face_ops[fi]
                fq = fo.quad
                int_off_f = fq.weights @ (fq.points - cb.center)
                wxn = np.cross(np.cross(int_off_f, ec), mesh.face_normal[fi])
                rhs_c[c, fe_maps[k]] -= omega[k] * (wxn @ fo.gamma) / vol
        pcurl = -0.5 * rhs_c

        # Vector potential on the div space over the zero-mean linears.
        drow = omega * mesh.face_area[cf_ids] / vol
        int_r = int_m[1:] - means * vol
        rhs_d = -np.outer(int_r, drow) / vol
        for k, fi in enumerate(cf_ids):
            fq = self.face_ops[fi].quad
            rvals = cb.eval(fq.points)[:, 1:] - means[None, :]
            rhs_d[:, k] += omega[k] * (fq.weights @ rvals) / vol
        # grad r_k = e_k / h_T, so the defining system is diagonal.
        pdiv = h_t * rhs_d

        # Stabilisations.
        s_grad = np.zeros((nv, nv))
        s_curl = np.zeros((ne, ne))
        s_div = np.zeros((nf, nf))
        for k, fi in enumerate(cf_ids):
            fo = self.face_ops[fi]
            fq = fo.quad
            h_f = mesh.face_diameter[fi]
            n_f = mesh.face_normal[fi]
            dq = cb.eval(fq.points) @ pgrad
            dq[:, fv_maps[k]] -= fo.basis.eval(fq.points) @ fo.trf
            s_grad += h_f * np.einsum("q,qi,qj->ij", fq.weights, dq, dq)

            tang = (np.eye(3) - np.outer(n_f, n_f)) @ pcurl
            dv = tang.copy()
            dv[:, fe_maps[k]] -= fo.gamma
            s_curl += h_f * mesh.face_area[fi] * dv.T @ dv

            row = (n_f @ pdiv).copy()
            row[k] -= 1.0
            s_div += h_f * mesh.face_area[fi] * np.outer(row, row)
        for e in ce:
            le = mesh.edge_length[e]
            er = rule(mesh, edge_id(e), 2)
            lo, hi = mesh.edges[e]
            s = (er.points - mesh.vertices[lo]) @ mesh.edge_tangent[e] / le
            dq = cb.eval(er.points) @ pgrad
            a = int(np.searchsorted(cv, lo))
            b = int(np.searchsorted(cv, hi))
            dq[:, a] -= 1.0 - s
            dq[:, b] -= s
            s_grad += le**2 * np.einsum("q,qi,qj->ij", er.weights, dq, dq)

            row = (mesh.edge_tangent[e] @ pcurl).copy()
            row[int(np.searchsorted(ce, e))] -= 1.0
            s_curl += le**3 * np.outer(row, row)

        m1 = np.einsum("q,qi,qj->ij", cq.weights, mono, mono)
        m_grad = pgrad.T @ m1 @ pgrad + s_grad
        m_curl = vol * pcurl.T @ pcurl + s_curl
        m_div = vol * pdiv.T @ pdiv + s_div

        return CellOperatorCache(
            index=ci,
            vertices=cv,
            edges=ce,
            faces=np.asarray(cf_ids),
            omega=omega,
            basis=cb,
            cgt=cgt,
            pgrad=pgrad,
            int_pgrad=int_pgrad,
            cct=cct,
            pcurl=pcurl,
            pdiv=pdiv,
            drow=drow,
            s_grad=s_grad,
            s_curl=s_curl,
            s_div=s_div,
            m_grad=m_grad,
            m_curl=m_curl,
            m_div=m_div,
        )

    # -- global assembly -----------------------------------------------------

    def _assemble_operators(self):
        mesh = self.mesh
        ne, nv, nf, nt = mesh.n_edges, mesh.n_vertices, mesh.n_faces, mesh.n_cells
        rows = np.repeat(np.arange(ne), 2)
        cols = mesh.edges.ravel()
        vals = (np.tile([-1.0, 1.0], ne) / np.repeat(mesh.edge_length, 2)).ravel()
        self.gradient_matrix = sps.csr_matrix((vals, (rows, cols)), shape=(ne, nv))

        r, c, v = [], [], []
        for fi in range(nf):
            fo = self.face_ops[fi]
            r.extend([fi] * len(fo.edges))
            c.extend(fo.edges.tolist())
            v.extend(fo.cf.tolist())
        self.curl_matrix = sps.csr_matrix((v, (r, c)), shape=(nf, ne))

        r, c, v = [], [], []
        for ci in range(nt):
            co = self.cell_ops[ci]
            r.extend([ci] * len(co.faces))
            c.extend(co.faces.tolist())
            v.extend(co.drow.tolist())
        self.divergence_matrix = sps.csr_matrix((v, (r, c)), shape=(nt, nf))

    def _accumulate(self, blocks, dofs, n):
        r, c, v = [], [], []
        for blk, ids in zip(blocks, dofs):
            ii, jj = np.meshgrid(ids, ids, indexing="ij")
            r.append(ii.ravel())
            c.append(jj.ravel())
            v.append(blk.ravel())
        mat = sps.csr_matrix(
            (np.concatenate(v), (np.concatenate(r), np.concatenate(c))), shape=(n, n)
        )
        return 0.5 * (mat + mat.T)

    def _assemble_grams(self):
        mesh = self.mesh
        self.gram_grad = self._accumulate(
            [co.m_grad for co in self.cell_ops],
            [co.vertices for co in self.cell_ops],
            mesh.n_vertices,
        )
        self.gram_curl = self._accumulate(
            [co.m_curl for co in self.cell_ops],
            [co.edges for co in self.cell_ops],
            mesh.n_edges,
        )
        self.gram_div = self._accumulate(
            [co.m_div for co in self.cell_ops],
            [co.faces for co in self.cell_ops],
            mesh.n_faces,
        )

    # -- spec operations ------------------------------------------------------

    def interpolate_grad(self, f) -> np.ndarray:
        """Vertex values of a scalar field callable on (n, 3) points."""
        return np.asarray(f(self.mesh.vertices), dtype=float)

    def interpolate_curl(self, v, degree: int = INTERP_DEGREE) -> np.ndarray:
        """Edge means of the tangential component of a 3D field."""
        pts, w = _edge_batch_points(self.mesh, degree)
        vals = np.asarray(v(pts.reshape(-1, 3))).reshape(pts.shape)
        return np.einsum("q,eqc,ec->e", w, vals, self.mesh.edge_tangent)

    def interpolate_div(self, w, degree: int = INTERP_DEGREE) -> np.ndarray:
        """Face means of the normal component of a 3D field."""
        mesh = self.mesh
        out = np.empty(mesh.n_faces)
        for fi in range(mesh.n_faces):
            q = rule(mesh, face_id(fi), degree)
            vals = np.asarray(w(q.points)) @ mesh.face_normal[fi]
            out[fi] = q.weights @ vals / mesh.face_area[fi]
        return out

    def discrete_gradient(self, q: np.ndarray) -> np.ndarray:
        return self.gradient_matrix @ q

    def discrete_curl(self, v: np.ndarray) -> np.ndarray:
        return self.curl_matrix @ v

    def discrete_divergence(self, w: np.ndarray) -> np.ndarray:
        return self.divergence_matrix @ w

    def build_cell_cache(self, ci: int) -> CellOperatorCache:
        return self.cell_ops[ci]

    def assemble_gram(self, space: str) -> sps.csr_matrix:
        if space == "grad":
            return self.gram_grad
        if space == "curl":
            return self.gram_curl
        if space == "div":
            return self.gram_div
        raise ValueError(f"unknown space {space!r}")

    def inner(self, space: str, mu: np.ndarray, zeta: np.ndarray) -> float:
        return float(mu @ (self.assemble_gram(space) @ zeta))

    def space_size(self, space: str) -> int:
        if space == "grad":
            return self.mesh.n_vertices
        if space == "curl":
            return self.mesh.n_edges
        if space == "div":
            return self.mesh.n_faces
        raise ValueError(f"unknown space {space!r}")
