"""Entanglement swapping for many-qubit states.

The package simulates a swapping protocol that shares an arbitrary
entangled target state between two end parties through one or more
intermediate nodes. It covers the postselected variant, its
feedforward (postselection-free) variants, closed-form predictions
from the target's Schmidt spectrum, and density-matrix or trajectory
runs under parametric noise. ``swapnet.cli`` exposes the same
experiments as a command line tool; ``swapnet.plotting`` renders its
tables and is imported lazily so matplotlib stays optional at runtime.
"""

from .circuits import (
    BrickworkSpec,
    Gate,
    apply_circuit,
    brickwork_circuit,
    circuit_unitary,
    ghz_circuit,
    ghz_state,
    haar_random_state,
    random_brickwork,
    state_with_spectrum,
    theta_circuit,
    theta_state,
)
from .errors import (
    ConfigError,
    ImpossibleOutcomeError,
    InvariantError,
    SizeLimitError,
    SwapnetError,
)
from .noise import (
    DEFAULT_NOISE_GRIDS,
    ConfusionMatrix,
    DensityMatrix,
    KrausChannel,
    NoiseParams,
    NoisyRunResult,
    OutcomeDistribution,
    apply_channel,
    apply_readout,
    depolarizing_channel,
    ecr_channel,
    hellinger_fidelity,
    identity_channel,
    noise_params_for,
    noisy_protocol_run,
    pad_channel,
    required_shots,
)
from .protocol import (
    MODE_FF_GENERAL,
    MODE_FF_UNIFORM,
    MODE_POSTSELECT,
    Branch,
    EmpiricalStats,
    NodeRecord,
    SwapConfig,
    SwapResult,
    compute_r_matrix,
    enumerate_branches,
    ghz_config,
    run_feedforward,
    run_network,
    run_protocol,
    run_single_node,
)
from .qstate import (
    MAX_QUBITS,
    QubitPartition,
    StateVector,
    UnitaryMatrix,
    apply_unitary,
    inner_product,
    states_close,
    tensor_product,
)
from .schmidt import (
    SchmidtDecomposition,
    SpectrumAnalytics,
    perturbative_fidelity,
    perturbative_fidelity_from_moments,
    predicted_fidelity_network,
    predicted_fidelity_single,
    predicted_postselection_prob,
    predicted_shared_coeffs,
    reconstruct_state,
    renyi_entropy,
    schmidt_decompose,
    spectrum_analytics,
)
from .unitaries import (
    TargetLikeFamily,
    build_flattened_unitary,
    build_target_like_family,
    complete_unitary_from_column,
    correction_unitary,
)

__version__ = "0.1.0"

__all__ = [
    "BrickworkSpec",
    "Branch",
    "ConfigError",
    "ConfusionMatrix",
    "DEFAULT_NOISE_GRIDS",
    "DensityMatrix",
    "EmpiricalStats",
    "Gate",
    "ImpossibleOutcomeError",
    "InvariantError",
    "KrausChannel",
    "MAX_QUBITS",
    "MODE_FF_GENERAL",
    "MODE_FF_UNIFORM",
    "MODE_POSTSELECT",
    "NodeRecord",
    "NoiseParams",
    "NoisyRunResult",
    "OutcomeDistribution",
    "QubitPartition",
    "SchmidtDecomposition",
    "SizeLimitError",
    "SpectrumAnalytics",
    "StateVector",
    "SwapConfig",
    "SwapResult",
    "SwapnetError",
    "TargetLikeFamily",
    "UnitaryMatrix",
    "apply_channel",
    "apply_circuit",
    "apply_readout",
    "apply_unitary",
    "brickwork_circuit",
    "build_flattened_unitary",
    "build_target_like_family",
    "circuit_unitary",
    "complete_unitary_from_column",
    "compute_r_matrix",
    "correction_unitary",
    "depolarizing_channel",
    "ecr_channel",
    "enumerate_branches",
    "ghz_circuit",
    "ghz_config",
    "ghz_state",
    "haar_random_state",
    "hellinger_fidelity",
    "identity_channel",
    "inner_product",
    "noise_params_for",
    "noisy_protocol_run",
    "pad_channel",
    "perturbative_fidelity",
    "perturbative_fidelity_from_moments",
    "predicted_fidelity_network",
    "predicted_fidelity_single",
    "predicted_postselection_prob",
    "predicted_shared_coeffs",
    "random_brickwork",
    "reconstruct_state",
    "renyi_entropy",
    "required_shots",
    "run_feedforward",
    "run_network",
    "run_protocol",
    "run_single_node",
    "schmidt_decompose",
    "spectrum_analytics",
    "state_with_spectrum",
    "states_close",
    "tensor_product",
    "theta_circuit",
    "theta_state",
]
