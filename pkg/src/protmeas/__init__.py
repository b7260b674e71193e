"""Protective measurement of a spin-1/2 system by spin-1/2 detectors."""
from .ensemble import (EnsembleResult, ensemble_evolve_brute, ensemble_evolve_factorized,
                       fluctuation_scaling)
from .evolution import EvolutionPlan, propagate, step_convergence
from .impulsive import ImpulsiveResult, born_sample, impulsive_measure
from .linalg import evolve, fidelity, partial_trace, spectral, tensor
from .protective import (ProtectiveResult, flip_probability_leading, perturbation_report,
                         reconstruct_state, run_protective)
from .spin import (CouplingProfile, SystemConfig, UnitaryFamilyParams, hamiltonian_from_unitary,
                   interaction_hamiltonian, measurement_unitary, pauli, projector,
                   protection_field, system_hamiltonian)

__version__ = "0.1.0"

__all__ = [
    "CouplingProfile", "EnsembleResult", "EvolutionPlan", "ImpulsiveResult", "ProtectiveResult",
    "SystemConfig", "UnitaryFamilyParams", "born_sample", "ensemble_evolve_brute",
    "ensemble_evolve_factorized", "evolve", "fidelity", "flip_probability_leading",
    "fluctuation_scaling", "hamiltonian_from_unitary", "impulsive_measure",
    "interaction_hamiltonian", "measurement_unitary", "partial_trace", "pauli",
    "perturbation_report", "projector", "propagate", "protection_field", "reconstruct_state",
    "run_protective", "spectral", "step_convergence", "system_hamiltonian", "tensor",
]
