"""Interior-penalty DG solver for advection-diffusion-reaction problems of
nonnegative characteristic form, with facet-classified minimal penalties."""

from .assembly import (AssembledSystem, Assembler, StabilizationConfig,
                       assemble, estimate_C_inv)
from .mesh import (FacetGeom, Mesh, MeshTopologyError,
                   build_structured_triangular, extract_facets,
                   mesh_quality_report)
from .partition import (BoundaryClass, ClassificationError, FacetPartition,
                        InteriorClass, classify)
from .problem import (ExactSolution, Field, ProblemData, builtin_problem,
                      constant_field, custom_problem, piecewise_field,
                      scalar_field, tensor_field, validate_problem,
                      vector_field)
from .solver import (ConvergenceFailureError, SingularSystemError,
                     SolverConfig, solve)
from .space import DGSpace, ReferenceBasis
from .harness import (compare_penalty_modes, compute_errors, run_consistency,
                      run_convergence, run_identity_suite)

__version__ = "0.1.0"

__all__ = [
    "AssembledSystem", "Assembler", "StabilizationConfig", "assemble",
    "estimate_C_inv", "FacetGeom", "Mesh", "MeshTopologyError",
    "build_structured_triangular", "extract_facets", "mesh_quality_report",
    "BoundaryClass", "ClassificationError", "FacetPartition", "InteriorClass",
    "classify", "ExactSolution", "Field", "ProblemData", "builtin_problem",
    "constant_field", "custom_problem", "piecewise_field", "scalar_field",
    "tensor_field", "validate_problem", "vector_field",
    "ConvergenceFailureError", "SingularSystemError", "SolverConfig", "solve",
    "DGSpace", "ReferenceBasis", "compare_penalty_modes", "compute_errors",
    "run_consistency", "run_convergence", "run_identity_suite",
]
