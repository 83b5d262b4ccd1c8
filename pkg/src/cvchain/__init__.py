"""Entangled-state transfer in oscillator chains: Gaussian dynamics + Krotov control."""

from .gaussian import (
    TimeGrid,
    symplectic_form,
    vacuum_cm,
    tmss_cm,
    closed_drift,
    lift_generator,
    pad_state,
    unpad_state,
    propagate,
    symplectic_eigenvalues,
)
from .chains import (
    ChainSpec,
    X_CHAIN_EDGES,
    linear_chain_form,
    x_chain_form,
    chain_form,
    control_form,
    coupling_vector,
    initial_guess,
)
from .measures import (
    reduce_cm,
    gaussian_fidelity,
    log_negativity,
    residuals,
    objective_value,
    WignerSlice,
    wigner_slice,
    control_spectrum,
)
from .open_system import (
    BathParams,
    o_rhs,
    integrate_o,
    dissipative_terms,
    open_generator,
)
from .krotov import (
    TrajectoryPair,
    KrotovConfig,
    IterationRecord,
    KrotovResult,
    blackman_shape,
    clamp_controls,
    cm_gradient,
    terminal_costate,
    backward_propagate,
    control_update,
    krotov_optimize,
    propagate_with_controls,
    pairs_from_squeezing,
    KrotovOptimizer,
)

__version__ = "0.1.0"
