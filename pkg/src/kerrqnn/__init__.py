"""Driven-dissipative Kerr-nonlinear bosonic network simulator.

Evolves truncated multimode Fock-space density matrices under a lossy
master equation, trains affine readouts for an XOR gate under measurement
noise, and optimizes passive mixing unitaries with vacuum conditioning to
generate two-component superposition states scored by a normalized
Wigner-function distance.
"""

__version__ = "0.1.0"

from . import _kernels, dynamics, fock, readout, train, wigner
from ._kernels import available_backends, default_backend
from .fock import (
    Basis,
    DensityMatrix,
    NumericalHealthError,
    Operator,
    StateVector,
    build_basis,
    cat_state,
    coherent_state,
    expectation,
    mode_annihilation,
    mode_creation,
    mode_number,
    partial_trace,
    vacuum_state,
)
from .dynamics import (
    INFINITE_KERR,
    EvolutionConfig,
    MeanFieldState,
    NetworkParams,
    build_hamiltonian,
    chain_coupling,
    evolve_master_equation,
    evolve_mean_field,
    lindblad_derivative,
    liouvillian_apply_count_benchmark,
)
from .readout import (
    ConditionedOutput,
    MixingMatrix,
    NoiseModel,
    apply_measurement_noise,
    condition_on_vacuum,
    linear_readout,
    mixing_unitary,
    occupations,
)
from .wigner import (
    GridSpec,
    WignerGrid,
    target_cat_wigner,
    wigner_error,
    wigner_of_state,
    wigner_to_csv,
    wigner_to_json,
)
from .train import (
    CatTaskConfig,
    OptimizerSettings,
    TrainResult,
    XorTaskConfig,
    optimize_cat_mixing,
    run_xor_forward,
    solve_readout_weights,
    sweep_nonlinearity,
    train_xor,
    unitary_from_generator,
    xor_task_error,
)
