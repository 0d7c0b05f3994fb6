"""Pseudo-spectral solvers for the Stokes resolvent problem in the whole space,
the half-space and above a small-Lipschitz graph, with a verification harness."""

from .field import (
    DEFAULT_SECTOR,
    Field,
    ResolventParam,
    RhsTriple,
    Sector,
    SlabGrid,
    TorusGrid,
    fft_backward,
    fft_forward,
    lq_norm,
    neg_sobolev_surrogate,
    principal_sqrt,
    scalar_field,
    sector_contains,
    spectral_derivative,
    tensor_field,
    vector_field,
    vertical_derivative_fd4,
)
from .graph import (
    GraphProfile,
    GraphSolution,
    IterationLog,
    contraction_probe,
    remainder_apply,
    rescale_to_unit,
    solve_graph,
)
from .halfspace import (
    CorrectorKernelEval,
    HalfSpaceSolution,
    boundary_corrector,
    kernel_decay_probe,
    m0_eval,
    parity_extend,
    solve_half_space,
)
from .wholespace import (
    WholeSpaceSolution,
    leray_project,
    poisson_solve,
    residual,
    solve_whole_space,
    stokes_multiplier,
)

__version__ = "0.1.0"
