"""Exact polynomial quadrature on mesh entities, monomial bases, projections.

Edges use Gauss-Legendre rules.  Faces are fanned into triangles from the
face centroid and cells into tetrahedra from the cell centroid over those
triangles; each simplex carries a collapsed (Duffy) tensor Gauss rule of the
requested exactness degree.
"""

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .mesh import DegenerateEntityError, EntityId, Mesh


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights; weights sum to the entity measure."""

    points: np.ndarray  # (n, 3)
    weights: np.ndarray  # (n,)

    def integrate(self, f):
        """Integrate a callable mapping (n, 3) points to (n, ...) values."""
        vals = np.asarray(f(self.points))
        return np.tensordot(self.weights, vals, axes=(0, 0))


def _gauss01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _segment_rule(p0, p1, degree):
    x, w = _gauss01(max(1, (degree + 2) // 2))
    pts = p0[None, :] + x[:, None] * (p1 - p0)[None, :]
    return pts, w * np.linalg.norm(p1 - p0)


def _triangle_rule(v0, v1, v2, degree):
    # Duffy map x=a, y=b(1-a) of the unit square onto the reference triangle;
    # the Jacobian (1-a) raises the polynomial degree in a by one.
    na = max(1, (degree + 3) // 2)
    nb = max(1, (degree + 2) // 2)
    a, wa = _gauss01(na)
    b, wb = _gauss01(nb)
    A, B = np.meshgrid(a, b, indexing="ij")
    WA, WB = np.meshgrid(wa, wb, indexing="ij")
    x = A.ravel()
    y = (B * (1.0 - A)).ravel()
    w = (WA * WB * (1.0 - A)).ravel()
    pts = v0[None, :] + np.outer(x, v1 - v0) + np.outer(y, v2 - v0)
    area2 = np.linalg.norm(np.cross(v1 - v0, v2 - v0))
    return pts, w * area2


def _tet_rule(v0, v1, v2, v3, degree):
    na = max(1, (degree + 4) // 2)
    nb = max(1, (degree + 3) // 2)
    nc = max(1, (degree + 2) // 2)
    a, wa = _gauss01(na)
    b, wb = _gauss01(nb)
    c, wc = _gauss01(nc)
    A, B, C = np.meshgrid(a, b, c, indexing="ij")
    WA, WB, WC = np.meshgrid(wa, wb, wc, indexing="ij")
    x = A.ravel()
    y = (B * (1.0 - A)).ravel()
    z = (C * (1.0 - A) * (1.0 - B)).ravel()
    w = (WA * WB * WC * (1.0 - A) ** 2 * (1.0 - B)).ravel()
    pts = (
        v0[None, :]
        + np.outer(x, v1 - v0)
        + np.outer(y, v2 - v0)
        + np.outer(z, v3 - v0)
    )
    vol6 = np.dot(np.cross(v1 - v0, v2 - v0), v3 - v0)
    return pts, w * vol6


def _face_triangles(mesh: Mesh, fi: int):
    """Fan of (centroid, v_k, v_{k+1}) triangles in loop order."""
    loop = mesh.faces[fi]
    pts = mesh.vertices[loop]
    c = mesh.face_centroid[fi]
    n = len(loop)
    return [(c, pts[k], pts[(k + 1) % n]) for k in range(n)]


def rule(mesh: Mesh, p: EntityId, degree: int) -> QuadratureRule:
    """Quadrature rule exact for polynomials of total degree <= degree on p."""
    if p.kind == "edge":
        if mesh.edge_length[p.index] <= 0.0:
            raise DegenerateEntityError("zero-length edge")
        a, b = mesh.vertices[mesh.edges[p.index]]
        pts, w = _segment_rule(a, b, degree)
        return QuadratureRule(pts, w)
    if p.kind == "face":
        if mesh.face_area[p.index] <= 0.0:
            raise DegenerateEntityError("zero-area face")
        parts = [_triangle_rule(*tri, degree) for tri in _face_triangles(mesh, p.index)]
        pts = np.vstack([q for q, _ in parts])
        w = np.concatenate([w for _, w in parts])
        return QuadratureRule(pts, w)
    if p.kind == "cell":
        if mesh.cell_volume[p.index] <= 0.0:
            raise DegenerateEntityError("zero-volume cell")
        xc = mesh.cell_centroid[p.index]
        parts = []
        ci = p.index
        for fi, omega in zip(mesh.cells[ci], mesh.cell_face_orientation[ci]):
            for c, a, b in _face_triangles(mesh, fi):
                # Outward ordering keeps the signed 6-volume positive.
                tri = (c, a, b) if omega > 0 else (c, b, a)
                parts.append(_tet_rule(xc, *tri, degree))
        pts = np.vstack([q for q, _ in parts])
        w = np.concatenate([w for _, w in parts])
        return QuadratureRule(pts, w)
    raise ValueError(f"no quadrature for entity kind {p.kind!r}")


def _exponents(dim: int, degree: int):
    out = []
    for d in range(degree + 1):
        for combo in combinations_with_replacement(range(dim), d):
            e = [0] * dim
            for c in combo:
                e[c] += 1
            out.append(tuple(e))
    return out


class MonomialBasis:
    """Scale-normalised monomials ((x - x_P) / h_P)^alpha on an entity.

    On edges the intrinsic coordinate is the tangential offset; on faces an
    orthonormal tangent frame of the face plane is used (built from the first
    non-degenerate loop edge); on cells the coordinates are Cartesian.
    """

    def __init__(self, mesh: Mesh, p: EntityId, degree: int):
        self.entity = p
        self.degree = degree
        self.center = mesh.entity_center(p)
        self.scale = mesh.entity_diameter(p)
        if p.kind == "edge":
            self.frame = mesh.edge_tangent[p.index][None, :]
        elif p.kind == "face":
            loop = mesh.faces[p.index]
            pts = mesh.vertices[loop]
            t1 = None
            for k in range(len(loop)):
                v = pts[(k + 1) % len(loop)] - pts[k]
                ln = np.linalg.norm(v)
                if ln > 1e-14 * self.scale:
                    t1 = v / ln
                    break
            if t1 is None:
                raise DegenerateEntityError("face has no non-degenerate edge")
            n = mesh.face_normal[p.index]
            t1 = t1 - (t1 @ n) * n
            t1 /= np.linalg.norm(t1)
            self.frame = np.vstack([t1, np.cross(n, t1)])
        elif p.kind == "cell":
            self.frame = np.eye(3)
        else:
            raise ValueError("no monomial basis on vertices")
        self.exponents = _exponents(len(self.frame), degree)

    def __len__(self) -> int:
        return len(self.exponents)

    def local_coords(self, points: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(points) - self.center) @ self.frame.T / self.scale

    def eval(self, points: np.ndarray) -> np.ndarray:
        """Basis values, shape (npoints, nbasis)."""
        xi = self.local_coords(points)
        cols = [np.prod(xi**np.array(e), axis=1) for e in self.exponents]
        return np.column_stack(cols)

    def eval_grad(self, points: np.ndarray) -> np.ndarray:
        """Ambient-space gradients, shape (npoints, nbasis, 3)."""
        xi = self.local_coords(points)
        npts = len(xi)
        out = np.zeros((npts, len(self.exponents), 3))
        for j, e in enumerate(self.exponents):
            for d in range(len(self.frame)):
                if e[d] == 0:
                    continue
                ed = list(e)
                ed[d] -= 1
                part = e[d] * np.prod(xi**np.array(ed), axis=1) / self.scale
                out[:, j, :] += part[:, None] * self.frame[d]
        return out


def _target_basis(mesh: Mesh, p: EntityId, target: str, sampling_degree: int):
    """Evaluation matrix (npoints, nbasis, ncomp) for a projection target."""
    q = rule(mesh, p, sampling_degree)
    if target in ("P0", "P1", "P2"):
        mb = MonomialBasis(mesh, p, int(target[1]))
        return q, mb.eval(q.points)[:, :, None]
    center = mesh.entity_center(p)
    if target == "P0,1":
        mb = MonomialBasis(mesh, p, 1)
        vals = mb.eval(q.points)[:, 1:]
        meas = q.weights.sum()
        vals = vals - (q.weights @ vals)[None, :] / meas
        return q, vals[:, :, None]
    if target == "Rc2":
        # (x - x_P) P^1(P), tangent to the entity.
        mb = MonomialBasis(mesh, p, 1)
        mono = mb.eval(q.points)
        offset = q.points - center
        vals = mono[:, :, None] * offset[:, None, :]
        return q, vals
    if target == "Gc1":
        if p.kind != "cell":
            raise ValueError("Gc1 target is cell-only")
        offset = q.points - center
        vals = np.stack([np.cross(offset, np.eye(3)[c]) for c in range(3)], axis=1)
        return q, vals
    raise ValueError(f"unknown projection target {target!r}")


def l2_project(
    mesh: Mesh, p: EntityId, f, target: str, sampling_degree: int = 8
) -> np.ndarray:
    """Coefficients of the L2-orthogonal projection of f onto a target space.

    Args:
        f: callable mapping (n, 3) points to scalars (n,) or vectors (n, 3).
        target: one of "P0", "P1", "P0,1", "Rc2", "Gc1".
    """
    q, basis = _target_basis(mesh, p, target, sampling_degree)
    vals = np.asarray(f(q.points), dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    if vals.shape[1] != basis.shape[2]:
        raise ValueError("field dimension does not match the target space")
    gram = np.einsum("q,qic,qjc->ij", q.weights, basis, basis)
    rhs = np.einsum("q,qic,qc->i", q.weights, basis, vals)
    try:
        return np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise DegenerateEntityError(f"singular projection Gram on {p}") from exc
