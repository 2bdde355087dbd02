"""Quantum-optical simulator of a closed-loop double-Lambda EIT four-wave-mixing medium."""

from .fock import (
    CapacityError,
    CoherentPair,
    FockDensityMatrix,
    PureTwoModeState,
    apply_channel,
    apply_channel_dilation,
    coherent_output,
    dilation_unitary,
    mode_probabilities,
    noon_state,
    uhlmann_fidelity,
)
from .gates import (
    NoSolutionError,
    coherent_response,
    hadamard_detuning,
    hom_probabilities,
    noon_report,
    qubit_probabilities,
    swap_report,
)
from .medium import (
    DomainError,
    MediumParams,
    PopulationSet,
    TransferMatrix,
    diffusion_matrices,
    loss_identity_check,
    noise_coefficients,
    propagation_coefficients,
    transfer_matrix,
    transfer_matrix_expm,
)

__version__ = "0.1.0"
