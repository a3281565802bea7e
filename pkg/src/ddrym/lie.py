"""Finite-dimensional real Lie algebras given by structure constants.

An algebra is defined by c[I, J, K] with [e_I, e_J] = c[I, J, K] e_K and an
Ad-invariant inner product g[I, J] = <e_I, e_J>.  Both tensors are validated
at construction: bracket antisymmetry, the Jacobi identity, symmetric
positive-definiteness of g, and total antisymmetry of <[e_I, e_J], e_K>.
"""

from dataclasses import dataclass, field

import numpy as np

ALGEBRA_TOL = 1e-13


class LieAlgebraError(ValueError):
    """Structure constants or metric violate a Lie-algebra axiom."""


@dataclass(frozen=True)
class LieAlgebra:
    structure: np.ndarray  # (dim, dim, dim)
    metric: np.ndarray  # (dim, dim)
    name: str = "custom"
    # <e_I, [e_J, e_K]>; totally antisymmetric by Ad-invariance.
    triple: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        c = np.asarray(self.structure, dtype=float)
        g = np.asarray(self.metric, dtype=float)
        if c.ndim != 3 or len(set(c.shape)) != 1:
            raise LieAlgebraError("structure constants must be a cubic tensor")
        d = c.shape[0]
        if g.shape != (d, d):
            raise LieAlgebraError("metric shape does not match the algebra dimension")
        scale = max(np.abs(c).max(), 1.0)
        if np.abs(c + np.swapaxes(c, 0, 1)).max() > ALGEBRA_TOL * scale:
            raise LieAlgebraError("structure constants are not antisymmetric")
        # Jacobi: sum of cyclic [[e_I,e_J],e_K] contributions vanishes.
        jac = (
            np.einsum("ijm,mkl->ijkl", c, c)
            + np.einsum("jkm,mil->ijkl", c, c)
            + np.einsum("kim,mjl->ijkl", c, c)
        )
        if np.abs(jac).max() > ALGEBRA_TOL * max(scale**2, 1.0):
            raise LieAlgebraError("Jacobi identity fails")
        if np.abs(g - g.T).max() > ALGEBRA_TOL * max(np.abs(g).max(), 1.0):
            raise LieAlgebraError("metric is not symmetric")
        if np.linalg.eigvalsh(0.5 * (g + g.T)).min() <= 0.0:
            raise LieAlgebraError("metric is not positive definite")
        t = np.einsum("ijl,lk->ijk", c, g)  # <[e_I,e_J], e_K>
        for perm, sign in [((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
                           ((1, 0, 2), -1), ((0, 2, 1), -1), ((2, 1, 0), -1)]:
            if np.abs(np.transpose(t, perm) - sign * t).max() > ALGEBRA_TOL * max(
                np.abs(t).max(), 1.0
            ):
                raise LieAlgebraError("metric is not Ad-invariant")
        c = np.ascontiguousarray(c)
        g = np.ascontiguousarray(g)
        c.flags.writeable = False
        g.flags.writeable = False
        object.__setattr__(self, "structure", c)
        object.__setattr__(self, "metric", g)
        # Store the triple product with exact total antisymmetry so that
        # downstream contractions cancel exactly in floating point.
        tri = np.zeros_like(t)
        for i in range(d):
            for j in range(i + 1, d):
                for k in range(j + 1, d):
                    v = t[i, j, k]
                    tri[i, j, k] = tri[j, k, i] = tri[k, i, j] = v
                    tri[j, i, k] = tri[i, k, j] = tri[k, j, i] = -v
        tri.flags.writeable = False
        object.__setattr__(self, "triple", tri)

    @property
    def dim(self) -> int:
        return self.structure.shape[0]

    def bracket(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """[a, b] for coefficient arrays with the algebra index last."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a.shape[-1] != self.dim or b.shape[-1] != self.dim:
            raise LieAlgebraError("coefficient length does not match dim")
        return np.einsum("...i,...j,ijk->...k", a, b, self.structure)

    def inner(self, a: np.ndarray, b: np.ndarray):
        """<a, b> for coefficient arrays with the algebra index last."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a.shape[-1] != self.dim or b.shape[-1] != self.dim:
            raise LieAlgebraError("coefficient length does not match dim")
        return np.einsum("...i,...j,ij->...", a, b, self.metric)


def su2() -> LieAlgebra:
    """su(2) in the basis e_I = -(i/2) sigma_I: [e_1, e_2] = e_3 cyclically.

    The metric is delta_IJ, which equals -2 trace(ab) on the matrix
    representation.
    """
    c = np.zeros((3, 3, 3))
    for i, j, k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
        c[i, j, k] = 1.0
        c[j, i, k] = -1.0
    return LieAlgebra(c, np.eye(3), name="su2")


def u1() -> LieAlgebra:
    """The 1-dimensional abelian algebra with unit metric."""
    return LieAlgebra(np.zeros((1, 1, 1)), np.eye(1), name="u1")


def bracket(alg: LieAlgebra, a, b):
    return alg.bracket(a, b)


def inner(alg: LieAlgebra, a, b):
    return alg.inner(a, b)
