"""Constraint-preserving Yang-Mills and Maxwell solvers on polyhedral meshes.

The package builds the lowest-order discrete de Rham complex on a general
polyhedral mesh, tensorises it with a compact Lie algebra, and time-steps
the temporal-gauge Yang-Mills system with a Lagrange-multiplier scheme that
preserves the discrete Gauss constraint.
"""

from .ddr import CellOperatorCache, DdrComplex
from .laddr import LaddrComplex, LieField
from .lie import LieAlgebra, su2, u1
from .mesh import (
    DegenerateEntityError,
    EntityId,
    Mesh,
    MeshError,
    MeshFormatError,
    MeshValidationError,
    build_cubic_mesh,
    cell_id,
    dump_polymesh,
    edge_id,
    face_id,
    load_polymesh,
    vertex_id,
)
from .manufactured import ManufacturedForcing, ManufacturedSolution, manufactured_eval
from .quadrature import MonomialBasis, QuadratureRule, l2_project, rule
from .scheme import (
    DiagnosticsRow,
    Evolution,
    SchemeConfig,
    State,
    auto_steps,
    constraint_dual_norm,
    constraint_functional,
    magnetic_field,
)
from .solver import (
    NewtonConfig,
    NewtonError,
    NewtonReport,
    SolverError,
    estimate_min_singular_value,
    jacobian_fd_check,
    newton_solve,
    solve_least_squares,
    solve_spd,
)

__version__ = "0.1.0"

__all__ = [
    "CellOperatorCache",
    "DdrComplex",
    "DegenerateEntityError",
    "DiagnosticsRow",
    "EntityId",
    "Evolution",
    "LaddrComplex",
    "LieAlgebra",
    "LieField",
    "ManufacturedForcing",
    "ManufacturedSolution",
    "Mesh",
    "MeshError",
    "MeshFormatError",
    "MeshValidationError",
    "MonomialBasis",
    "NewtonConfig",
    "NewtonError",
    "NewtonReport",
    "QuadratureRule",
    "SchemeConfig",
    "SolverError",
    "State",
    "auto_steps",
    "build_cubic_mesh",
    "cell_id",
    "constraint_dual_norm",
    "constraint_functional",
    "dump_polymesh",
    "edge_id",
    "estimate_min_singular_value",
    "face_id",
    "jacobian_fd_check",
    "l2_project",
    "load_polymesh",
    "magnetic_field",
    "manufactured_eval",
    "newton_solve",
    "rule",
    "solve_least_squares",
    "solve_spd",
    "su2",
    "u1",
    "vertex_id",
]
