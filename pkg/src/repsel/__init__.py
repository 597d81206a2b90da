"""Outlier-aware representative selection from manifold data.

Representatives are the non-zero rows of a row-sparse self-representation
matrix computed over a kernel Gram matrix.  The same matrix yields a
per-sample outlier score.
"""

__version__ = "0.1.0"

from repsel.errors import (
    AsymmetricKernelError,
    DataError,
    NotPSDError,
    NumericalError,
    ReprselError,
)
from repsel.kernel import KernelSpec, build_gram, kernel_distance, psd_repair, validate_psd
from repsel.selection import (
    SelectionConfig,
    SelectionResult,
    detect_outliers,
    diversity_prune,
    influence_ranking,
    nonzero_rows,
    op_score,
    select,
)
from repsel.sketch import SketchConfig, SketchState, solve_sketched
from repsel.solver import (
    RepresentationMatrix,
    SolveDiagnostics,
    SolverConfig,
    lambda_critical,
    objective,
    solve,
)

__all__ = [
    "AsymmetricKernelError",
    "DataError",
    "KernelSpec",
    "NotPSDError",
    "NumericalError",
    "ReprselError",
    "RepresentationMatrix",
    "SelectionConfig",
    "SelectionResult",
    "SketchConfig",
    "SketchState",
    "SolveDiagnostics",
    "SolverConfig",
    "build_gram",
    "detect_outliers",
    "diversity_prune",
    "influence_ranking",
    "kernel_distance",
    "lambda_critical",
    "nonzero_rows",
    "objective",
    "op_score",
    "psd_repair",
    "select",
    "solve",
    "solve_sketched",
    "validate_psd",
]
