"""Workbench for learning ground-state energy profiles of parametrized
Hamiltonians with variational quantum circuits, simulated exactly."""

from .circuit import (
    CircuitBuilder,
    Const,
    Gaussian,
    Linear,
    ParamRegistry,
    Var,
    bind_and_run,
    build_encoding_layers,
    build_ga_circuit,
    build_meta_circuit,
    build_processing_layers,
    build_ucc_circuit,
    eval_param_expr,
    parse_generator_file,
)
from .exact import ground_state, ground_state_dense, ground_state_lanczos
from .gradient import (
    EvalCounter,
    GradientResult,
    finite_diff_gradient,
    param_shift_gradient,
)
from .optimizer import OptimizerConfig, OptTrace, minimize, random_init
from .pauli import (
    FileFamily,
    PauliSum,
    PauliTerm,
    XxzFamily,
    build_xxz,
    format_hamiltonian,
    matvec,
    parse_family_file,
    parse_hamiltonian_file,
)
from .statevector import Statevector, apply_gate, basis_state, expectation, zero_state
from .workflows import (
    EnergyProfile,
    RandomStart,
    TrainingGrid,
    TrainResult,
    WarmStart,
    equispaced,
    evaluate_profile,
    exact_profile,
    meta_loss,
    run_vqe_per_point,
    train_ga_vqe,
    train_meta_vqe,
)

__version__ = "0.1.0"
