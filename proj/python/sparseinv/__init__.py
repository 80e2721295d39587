"""Sparse decomposition of polynomial dynamical systems.

Computes outer approximations of the region of attraction, the maximum
positively invariant set and the global attractor by splitting the system
into leaf subsystems of its weighted sparsity graph, solving per-subsystem
sum-of-squares relaxations, and gluing the certificates back together.
"""

from sparseinv._core import (  # noqa: F401
    Decomposition,
    GluedSet,
    OuterApprox,
    Polynomial,
    SolveDiagnostics,
    Subsystem,
    SystemDef,
    Trajectory,
    decouple,
    dlambda_estimate,
    estimate_mpi,
    glue,
    graph_summary,
    integrate,
    is_subsystem,
    lie_derivative,
    load_system,
    load_system_text,
    minimal_factorization,
    project_subsystem,
    solve_all,
    solve_ga,
    solve_mpi,
    solve_roa,
    validate_product_constraints,
    whole_system,
)

__version__ = "0.1.0"
