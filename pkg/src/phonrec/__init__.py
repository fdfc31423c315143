"""Reconstruction of frequency-dependent interface reflectivity from
surface-temperature measurements of linearized phonon transport."""

from .grid import PhaseGrid, coarse_grid, make_grid, paper_grid
from .physics import (
    MaxwellianTable,
    collide,
    delta_temperature,
    equilibrium_kernel,
    make_table,
    maxwellian_comparison,
)
from .transport import (
    BoundarySource,
    ForwardSolution,
    MaxPrincipleReport,
    as_reflectivity,
    forward_solve,
    max_principle_check,
)
from .adjoint import (
    AdjointSolution,
    MeasurementFunctional,
    adjoint_gradient,
    adjoint_pulse_demo,
    adjoint_solve,
)
from .inverse import (
    ReconstructionResult,
    ReconstructionState,
    TanhParams,
    calibrate_step_size,
    loss,
    measurement,
    measurement_gradient,
    reconstruction_error,
    residual,
    run_reconstruction,
    sgd_step,
    tanh_reflectivity,
    tanh_reflectivity_jacobian,
    update_direction,
)
from .data import (
    Dataset,
    ExperimentBank,
    compute_measurements,
    generate_dataset,
    load_dataset,
    make_bank,
    save_dataset,
)
from .oracle import (
    ConvexityReport,
    GradientCheckReport,
    central_differences,
    conservation_probe,
    convexity_sweep,
    equilibrium_residual,
    fd_gradient,
    gradient_check,
    monotonicity_check,
    selfadjoint_probe,
)

__version__ = "0.1.0"
