"""Landscape tomography: reconstructing a gate's environment from shot samples."""

from qlt.tomography.design import (
    Basis,
    CoverageWarning,
    DesignDiagnostics,
    DesignMatrix,
    GateSet,
    NormalEquations,
    Reconstruction,
    build_design_matrix,
    design_diagnostics,
    frame_potential,
    reconstruction_error,
    regress,
)
from qlt.tomography.linear import (
    LinearSquareResult,
    PhaseChainError,
    combination_gate,
    linear_cost,
    linear_square_estimate,
    linear_square_tomography,
    perfect_square_environment,
)
from qlt.tomography.sampling import ShotBatch, collect_samples, exact_samples
from qlt.tomography.tableaux import (
    CliffordCover,
    CoverError,
    CoverIntegrityError,
    TableauxGroup,
    builtin_cover_1q,
    builtin_cover_2q,
    greedy_cover_search,
    tableaux_estimate,
    tableaux_group,
    tableaux_tomography,
)
from qlt.tomography.uniform import shadow_estimate, uniform_tomography

__all__ = [name for name in dir() if not name.startswith("_")]
