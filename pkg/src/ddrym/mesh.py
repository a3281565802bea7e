"""Polyhedral mesh with oriented edges/faces and cached geometry.

The mesh is a flat-indexed collection of vertices, edges, faces and cells.
Each edge carries a unit tangent (pointing from the lower to the higher
global vertex index), each face a unit normal obtained from its vertex loop
by Newell's formula.  Relative orientations are stored as signs:
``omega_fe[F][k] * n_fe[F][k]`` points out of face ``F`` in its plane, and
``omega_tf[T][k] * face_normal[F]`` points out of cell ``T``.

Meshes are immutable after construction and safe for concurrent reads.
"""

import json
from typing import IO, NamedTuple, Union

import numpy as np

PLANARITY_RTOL = 1e-9
CLOSURE_RTOL = 1e-10


class MeshError(Exception):
    """Invalid mesh topology or geometry."""


class MeshFormatError(MeshError):
    """Malformed polymesh input stream."""


class MeshValidationError(MeshError):
    """A mesh invariant is violated; the message names the first one."""


class DegenerateEntityError(MeshError):
    """An entity has (numerically) zero measure."""


class EntityId(NamedTuple):
    kind: str  # "vertex" | "edge" | "face" | "cell"
    index: int


def vertex_id(i: int) -> EntityId:
    return EntityId("vertex", int(i))


def edge_id(i: int) -> EntityId:
    return EntityId("edge", int(i))


def face_id(i: int) -> EntityId:
    return EntityId("face", int(i))


def cell_id(i: int) -> EntityId:
    return EntityId("cell", int(i))


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


def _polygon_geometry(pts: np.ndarray):
    """Newell normal, area, centroid, diameter and planar deviation of a loop.

    The loop orientation defines the normal; the area is positive for a
    simple loop.  Centroid and area come from a signed fan around the vertex
    mean, which is exact for arbitrary simple planar polygons.
    """
    n = len(pts)
    nrm = np.zeros(3)
    for k in range(n):
        nrm += np.cross(pts[k], pts[(k + 1) % n])
    norm2 = np.linalg.norm(nrm)
    diam = 0.0
    for i in range(n):
        d = np.linalg.norm(pts[i + 1 :] - pts[i], axis=1)
        if d.size:
            diam = max(diam, d.max())
    if norm2 <= 0.0 or not np.isfinite(norm2):
        return np.zeros(3), 0.0, pts.mean(axis=0), diam, 0.0
    normal = nrm / norm2
    m = pts.mean(axis=0)
    area = 0.0
    centroid = np.zeros(3)
    for k in range(n):
        a, b = pts[k] - m, pts[(k + 1) % n] - m
        s = 0.5 * np.cross(a, b) @ normal
        area += s
        centroid += s * (m + pts[k] + pts[(k + 1) % n]) / 3.0
    if area > 0.0:
        centroid = centroid / area
    # Deviation from the least-squares plane through the loop.
    q = pts - m
    _, sv, vt = np.linalg.svd(q, full_matrices=False)
    dev = float(np.abs(q @ vt[-1]).max()) if len(sv) == 3 else 0.0
    return normal, float(area), centroid, float(diam), dev


class Mesh:
    """Immutable polyhedral mesh with oriented entities and geometry cache.

    Args:
        vertices: (V, 3) array of coordinates.
        faces: list of vertex loops; each loop's Newell normal is the stored
            face normal.
        cells: list of face-index lists.
        validate: check all mesh invariants and raise
            ``MeshValidationError`` on the first violation.
    """

    def __init__(self, vertices, faces, cells, validate: bool = True):
        self.vertices = _freeze(np.asarray(vertices, dtype=float).reshape(-1, 3))
        nv = len(self.vertices)
        self.faces = [np.asarray(f, dtype=int) for f in faces]
        self.cells = [np.asarray(c, dtype=int) for c in cells]
        for f in self.faces:
            if len(f) < 3:
                raise MeshValidationError("face loop has fewer than 3 vertices")
            if f.min(initial=0) < 0 or f.max(initial=-1) >= nv:
                raise MeshFormatError("face vertex index out of range")
        for c in self.cells:
            if len(c) < 4:
                raise MeshValidationError("cell has fewer than 4 faces")
            if c.min(initial=0) < 0 or c.max(initial=-1) >= len(self.faces):
                raise MeshFormatError("cell face index out of range")

        self._build_edges()
        self._build_face_geometry(validate)
        self._build_cell_geometry(validate)
        if validate:
            self._validate()

    # -- construction ------------------------------------------------------

    def _build_edges(self):
        # Deduplicate edges by sorted vertex pair; t_E runs from the lower to
        # the higher global vertex index.
        pair_to_edge = {}
        edges = []
        self.face_edges = []
        self._face_edge_loop_sign = []  # +1 if t_E follows the loop direction
        for f in self.faces:
            ids, signs = [], []
            n = len(f)
            for k in range(n):
                a, b = int(f[k]), int(f[(k + 1) % n])
                if a == b:
                    raise MeshValidationError("degenerate face: repeated vertex")
                key = (min(a, b), max(a, b))
                e = pair_to_edge.get(key)
                if e is None:
                    e = len(edges)
                    pair_to_edge[key] = e
                    edges.append(key)
                ids.append(e)
                signs.append(1 if a < b else -1)
            self.face_edges.append(np.array(ids, dtype=int))
            self._face_edge_loop_sign.append(np.array(signs, dtype=int))
        self.edges = _freeze(np.array(edges, dtype=int).reshape(-1, 2))
        vec = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        self.edge_length = _freeze(np.linalg.norm(vec, axis=1))
        if np.any(self.edge_length <= 0.0):
            raise MeshValidationError("degenerate edge: zero length")
        self.edge_tangent = _freeze(vec / self.edge_length[:, None])
        self.edge_midpoint = _freeze(
            0.5 * (self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]])
        )

    def _build_face_geometry(self, validate: bool):
        nf = len(self.faces)
        self.face_normal = np.zeros((nf, 3))
        self.face_area = np.zeros(nf)
        self.face_centroid = np.zeros((nf, 3))
        self.face_diameter = np.zeros(nf)
        self.face_edge_orientation = []
        self.face_edge_normals = []
        for i, loop in enumerate(self.faces):
            pts = self.vertices[loop]
            normal, area, centroid, diam, dev = _polygon_geometry(pts)
            if validate and area <= 0.0:
                raise MeshValidationError("degenerate face: zero area")
            if validate and dev > PLANARITY_RTOL * max(diam, 1e-300):
                raise MeshValidationError("non-planar face beyond tolerance")
            self.face_normal[i] = normal
            self.face_area[i] = area
            self.face_centroid[i] = centroid
            self.face_diameter[i] = diam
            # (t_E, n_FE, n_F) right-handed gives n_FE = n_F x t_E.  An edge
            # aligned with the counter-clockwise loop direction (w.r.t. n_F)
            # has an inward n_FE, hence omega_FE = -loop_sign.
            tang = self.edge_tangent[self.face_edges[i]]
            nfe = np.cross(normal[None, :], tang)
            self.face_edge_normals.append(_freeze(nfe))
            self.face_edge_orientation.append(_freeze(-self._face_edge_loop_sign[i]))
        self.face_normal = _freeze(self.face_normal)
        self.face_area = _freeze(self.face_area)
        self.face_centroid = _freeze(self.face_centroid)
        self.face_diameter = _freeze(self.face_diameter)

    def _cell_volume_centroid(self, ci: int, omega: np.ndarray):
        """Signed-tetrahedron decomposition from the cell vertex mean."""
        apex = self.vertices[self.cell_vertices[ci]].mean(axis=0)
        vol = 0.0
        mom = np.zeros(3)
        for fi, w in zip(self.cells[ci], omega):
            loop = self.faces[fi]
            pts = self.vertices[loop]
            cf = self.face_centroid[fi]
            n = len(loop)
            for k in range(n):
                p, q = pts[k], pts[(k + 1) % n]
                v = w * np.cross(p - apex, q - apex) @ (cf - apex) / 6.0
                vol += v
                mom += v * (apex + cf + p + q) / 4.0
        return vol, (mom / vol if vol > 0 else apex)

    def _build_cell_geometry(self, validate: bool):
        nt = len(self.cells)
        self.cell_vertices = []
        self.cell_edges = []
        for c in self.cells:
            vs = np.unique(np.concatenate([self.faces[f] for f in c]))
            es = np.unique(np.concatenate([self.face_edges[f] for f in c]))
            self.cell_vertices.append(_freeze(vs))
            self.cell_edges.append(_freeze(es))
        self.cell_volume = np.zeros(nt)
        self.cell_centroid = np.zeros((nt, 3))
        self.cell_diameter = np.zeros(nt)
        self.cell_face_orientation = []
        for ci, c in enumerate(self.cells):
            pts = self.vertices[self.cell_vertices[ci]]
            dmax = 0.0
            for i in range(len(pts)):
                d = np.linalg.norm(pts[i + 1 :] - pts[i], axis=1)
                if d.size:
                    dmax = max(dmax, d.max())
            self.cell_diameter[ci] = dmax
            ref = pts.mean(axis=0)
            omega = np.sign(
                np.einsum("ij,ij->i", self.face_normal[c], self.face_centroid[c] - ref)
            ).astype(int)
            if validate and np.any(omega == 0):
                raise MeshValidationError("ambiguous cell-face orientation")
            omega[omega == 0] = 1
            vol, cen = self._cell_volume_centroid(ci, omega)
            # Re-test the orientation convention against the true centroid.
            omega2 = np.sign(
                np.einsum("ij,ij->i", self.face_normal[c], self.face_centroid[c] - cen)
            ).astype(int)
            omega2[omega2 == 0] = 1
            if np.any(omega2 != omega):
                omega = omega2
                vol, cen = self._cell_volume_centroid(ci, omega)
            if validate and (vol <= 0.0 or not np.isfinite(vol)):
                raise MeshValidationError("degenerate cell: non-positive volume")
            self.cell_volume[ci] = vol
            self.cell_centroid[ci] = cen
            self.cell_face_orientation.append(_freeze(omega))
        self.cell_volume = _freeze(self.cell_volume)
        self.cell_centroid = _freeze(self.cell_centroid)
        self.cell_diameter = _freeze(self.cell_diameter)

        # Upward incidence face -> cells.
        self.face_cells = [[] for _ in self.faces]
        for ci, c in enumerate(self.cells):
            for k, fi in enumerate(c):
                self.face_cells[int(fi)].append((ci, int(self.cell_face_orientation[ci][k])))
        self.boundary_faces = _freeze(
            np.array([i for i, fc in enumerate(self.face_cells) if len(fc) == 1], dtype=int)
        )

    def _validate(self):
        for fi, fc in enumerate(self.face_cells):
            if len(fc) == 0:
                raise MeshValidationError("dangling face: not used by any cell")
            if len(fc) > 2:
                raise MeshValidationError("non-manifold face: shared by more than 2 cells")
            if len(fc) == 2 and fc[0][1] * fc[1][1] != -1:
                raise MeshValidationError(
                    "interior face without opposite relative orientations"
                )
        for ci, c in enumerate(self.cells):
            w = self.cell_face_orientation[ci]
            res = np.einsum("i,i,ij->j", w, self.face_area[c], self.face_normal[c])
            if np.linalg.norm(res) > CLOSURE_RTOL * self.face_area[c].sum():
                raise MeshValidationError("open cell boundary: surface closure fails")
        for fi in range(len(self.faces)):
            w = self.face_edge_orientation[fi]
            le = self.edge_length[self.face_edges[fi]]
            res = np.einsum("i,i,ij->j", w, le, self.face_edge_normals[fi])
            if np.linalg.norm(res) > CLOSURE_RTOL * le.sum():
                raise MeshValidationError("face edge-normal closure fails")

    # -- queries -----------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def h(self) -> float:
        """Largest cell diameter."""
        return float(self.cell_diameter.max())

    def counts(self):
        return (self.n_vertices, self.n_edges, self.n_faces, self.n_cells)

    def orientation(self, outer: EntityId, inner: EntityId) -> int:
        """Relative orientation omega for a (cell, face) or (face, edge) pair."""
        if outer.kind == "cell" and inner.kind == "face":
            c = self.cells[outer.index]
            hits = np.nonzero(c == inner.index)[0]
            if len(hits) == 0:
                raise MeshError("face is not incident to cell")
            return int(self.cell_face_orientation[outer.index][hits[0]])
        if outer.kind == "face" and inner.kind == "edge":
            fe = self.face_edges[outer.index]
            hits = np.nonzero(fe == inner.index)[0]
            if len(hits) == 0:
                raise MeshError("edge is not incident to face")
            return int(self.face_edge_orientation[outer.index][hits[0]])
        raise MeshError(f"unsupported orientation pair ({outer.kind}, {inner.kind})")

    def entity_measure(self, p: EntityId) -> float:
        if p.kind == "edge":
            return float(self.edge_length[p.index])
        if p.kind == "face":
            return float(self.face_area[p.index])
        if p.kind == "cell":
            return float(self.cell_volume[p.index])
        raise MeshError(f"no measure for entity kind {p.kind!r}")

    def entity_center(self, p: EntityId) -> np.ndarray:
        if p.kind == "vertex":
            return self.vertices[p.index]
        if p.kind == "edge":
            return self.edge_midpoint[p.index]
        if p.kind == "face":
            return self.face_centroid[p.index]
        return self.cell_centroid[p.index]

    def entity_diameter(self, p: EntityId) -> float:
        if p.kind == "edge":
            return float(self.edge_length[p.index])
        if p.kind == "face":
            return float(self.face_diameter[p.index])
        if p.kind == "cell":
            return float(self.cell_diameter[p.index])
        raise MeshError(f"no diameter for entity kind {p.kind!r}")

    def geometry_report(self) -> dict:
        """Per-entity measures, centroids and diameters.

        Raises:
            DegenerateEntityError: if any entity has non-positive measure.
        """
        if np.any(self.edge_length <= 0.0):
            raise DegenerateEntityError("zero-length edge")
        if np.any(self.face_area <= 0.0):
            raise DegenerateEntityError("zero-area face")
        if np.any(self.cell_volume <= 0.0):
            raise DegenerateEntityError("zero-volume cell")
        return {
            "edge_length": self.edge_length,
            "edge_midpoint": self.edge_midpoint,
            "face_area": self.face_area,
            "face_centroid": self.face_centroid,
            "face_diameter": self.face_diameter,
            "cell_volume": self.cell_volume,
            "cell_centroid": self.cell_centroid,
            "cell_diameter": self.cell_diameter,
            "h": self.h,
        }


def build_cubic_mesh(n: int) -> Mesh:
    """Uniform n x n x n cube partition of (0, 1)^3.

    Face normals are aligned with the +x/+y/+z axes.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    m = n + 1

    def vid(i, j, k):
        return i + m * (j + m * k)

    coords = np.array(
        [(i / n, j / n, k / n) for k in range(m) for j in range(m) for i in range(m)]
    )
    # Loops chosen so the Newell normal is the positive axis direction.
    faces = []
    fx = {}
    for i in range(m):
        for j in range(n):
            for k in range(n):
                fx[(i, j, k)] = len(faces)
                faces.append(
                    [vid(i, j, k), vid(i, j + 1, k), vid(i, j + 1, k + 1), vid(i, j, k + 1)]
                )
    fy = {}
    for j in range(m):
        for i in range(n):
            for k in range(n):
                fy[(i, j, k)] = len(faces)
                faces.append(
                    [vid(i, j, k), vid(i, j, k + 1), vid(i + 1, j, k + 1), vid(i + 1, j, k)]
                )
    fz = {}
    for k in range(m):
        for i in range(n):
            for j in range(n):
                fz[(i, j, k)] = len(faces)
                faces.append(
                    [vid(i, j, k), vid(i + 1, j, k), vid(i + 1, j + 1, k), vid(i, j + 1, k)]
                )
    cells = []
    for k in range(n):
        for j in range(n):
            for i in range(n):
                cells.append(
                    [
                        fx[(i, j, k)],
                        fx[(i + 1, j, k)],
                        fy[(i, j, k)],
                        fy[(i, j + 1, k)],
                        fz[(i, j, k)],
                        fz[(i, j, k + 1)],
                    ]
                )
    return Mesh(coords, faces, cells)


def load_polymesh(source: Union[bytes, str, IO]) -> Mesh:
    """Load a mesh from a polymesh JSON document.

    The format is ``{"vertices": [[x,y,z],...], "faces": [[v0,v1,...],...],
    "cells": [[f0,f1,...],...]}`` with 0-based indices; face loops are
    oriented so their Newell normal is the stored face normal.
    """
    if hasattr(source, "read"):
        data = source.read()
    else:
        data = source
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
        vertices = doc["vertices"]
        faces = doc["faces"]
        cells = doc["cells"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise MeshFormatError(f"malformed polymesh document: {exc}") from exc
    try:
        vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
    except ValueError as exc:
        raise MeshFormatError(f"malformed vertex table: {exc}") from exc
    return Mesh(vertices, faces, cells)


def dump_polymesh(mesh: Mesh) -> str:
    """Serialize a mesh to the polymesh JSON format (round-trips with load)."""
    doc = {
        "vertices": mesh.vertices.tolist(),
        "faces": [f.tolist() for f in mesh.faces],
        "cells": [c.tolist() for c in mesh.cells],
    }
    return json.dumps(doc)
