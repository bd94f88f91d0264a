"""Proxy-space characterisation and mitigation of logical noise in bosonic codes."""
from .affine import AffineMap, TrainingSet, affine_cost, apply_affine, fit_affine
from .codes import (CODE, NONE, CodeSpace, DetectionStrategy, basis_for, detection_projector, logical_pauli,
                    logical_state, make_code, standard_code)
from .decomp import NoiseBreakdown, noise_decomposition
from .dynamics import (DisorderSpec, EvolutionConfig, HamiltonianParams, LindbladChannel, LossRates,
                       build_hamiltonian, ensemble_average, evolve, sample_disorder)
from .errors import (ConfigError, IllConditionedError, NumericalError, PostSelectionError, ProxyMitError,
                     SizingError)
from .fock import DensityMatrix, FockBasis, Operator, StateVector, build_basis, fock_state, mode_operator
from .mitigation import ExpectationTriple, MitigationConfig, invert_block, prepare_superposition, \
    proxy_consistency, run_mitigation_experiment
from .tomography import LPTM, lptm, lptm_trace_distance, probe_channel, process_fidelity

__version__ = "0.1.0"

__all__ = [
    "AffineMap", "TrainingSet", "affine_cost", "apply_affine", "fit_affine", "CODE", "NONE", "CodeSpace",
    "DetectionStrategy", "basis_for", "detection_projector", "logical_pauli", "logical_state", "make_code",
    "standard_code", "NoiseBreakdown", "noise_decomposition", "DisorderSpec", "EvolutionConfig",
    "HamiltonianParams", "LindbladChannel", "LossRates", "build_hamiltonian", "ensemble_average", "evolve",
    "sample_disorder", "ConfigError", "IllConditionedError", "NumericalError", "PostSelectionError",
    "ProxyMitError", "SizingError", "DensityMatrix", "FockBasis", "Operator", "StateVector", "build_basis",
    "fock_state", "mode_operator", "ExpectationTriple", "MitigationConfig", "invert_block",
    "prepare_superposition", "proxy_consistency", "run_mitigation_experiment", "LPTM", "lptm",
    "lptm_trace_distance", "probe_channel", "process_fidelity", "__version__",
]
