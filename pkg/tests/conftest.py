import itertools
import json

import numpy as np
import pytest

from ddrym import DdrComplex, LaddrComplex, build_cubic_mesh, load_polymesh, su2


def freudenthal_tet_doc(n: int) -> dict:
    """Polymesh document for the 6-tets-per-cube triangulation of (0,1)^3.

    The subdivision uses the main-diagonal (Freudenthal/Kuhn) pattern, which
    is conforming across the cube grid.
    """
    m = n + 1

    def vid(i, j, k):
        return int(i + m * (j + m * k))

    verts = [[i / n, j / n, k / n] for k in range(m) for j in range(m) for i in range(m)]
    tets = []
    for k in range(n):
        for j in range(n):
            for i in range(n):
                for perm in itertools.permutations(range(3)):
                    path = [(i, j, k)]
                    for ax in perm:
                        nxt = list(path[-1])
                        nxt[ax] += 1
                        path.append(tuple(nxt))
                    tets.append([vid(*p) for p in path])
    faces = {}
    cells = []
    for t in tets:
        fids = []
        for tri in itertools.combinations(t, 3):
            key = tuple(sorted(tri))
            if key not in faces:
                faces[key] = (len(faces), list(tri))
            fids.append(faces[key][0])
        cells.append(fids)
    face_list = [None] * len(faces)
    for _, (fid, loop) in faces.items():
        face_list[fid] = loop
    return {"vertices": verts, "faces": face_list, "cells": cells}


def perturbed_cubic_doc(n: int, amplitude: float = 0.3, seed: int = 11) -> dict:
    """Sheared random-tensor-grid hexahedral mesh on the unit cube's image.

    Random per-axis spacings followed by a global shear keep every face
    planar while giving anisotropic, non-axis-aligned cells.
    """
    mesh = build_cubic_mesh(n)
    rng = np.random.default_rng(seed)
    knots = []
    for _ in range(3):
        gaps = 1.0 + amplitude * rng.uniform(-1, 1, n)
        k = np.concatenate([[0.0], np.cumsum(gaps)])
        knots.append(k / k[-1])
    pts = np.array(mesh.vertices)
    for d in range(3):
        pts[:, d] = np.interp(pts[:, d], np.linspace(0, 1, n + 1), knots[d])
    shear = np.array([[1.0, 0.15, 0.0], [0.0, 1.0, 0.1], [0.05, 0.0, 1.0]])
    pts = pts @ shear.T
    return {
        "vertices": pts.tolist(),
        "faces": [f.tolist() for f in mesh.faces],
        "cells": [c.tolist() for c in mesh.cells],
    }


@pytest.fixture(scope="session")
def tet_mesh():
    return load_polymesh(json.dumps(freudenthal_tet_doc(2)))


@pytest.fixture(scope="session")
def tet_mesh_one():
    doc = {
        "vertices": [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]],
        "faces": [[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]],
        "cells": [[0, 1, 2, 3]],
    }
    return load_polymesh(json.dumps(doc))


@pytest.fixture(scope="session")
def cubic2():
    return build_cubic_mesh(2)


@pytest.fixture(scope="session")
def cubic4():
    return build_cubic_mesh(4)


@pytest.fixture(scope="session")
def ddr2(cubic2):
    return DdrComplex(cubic2)


@pytest.fixture(scope="session")
def ddr4(cubic4):
    return DdrComplex(cubic4)


@pytest.fixture(scope="session")
def ddr_tet(tet_mesh):
    return DdrComplex(tet_mesh)


@pytest.fixture(scope="session")
def laddr2(ddr2):
    return LaddrComplex(ddr2, su2())
