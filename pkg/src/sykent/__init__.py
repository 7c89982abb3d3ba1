"""Simulation toolkit for entanglement-entropy growth in the SYK model.

Builds SYK Hamiltonians as Pauli sums, Trotterizes them into circuits, and
estimates second Renyi entropies with swap-test and randomized-measurement
protocols on a statevector engine, with optional noise, error mitigation and
batched multi-programming execution.
"""

from .pauli import PauliString, majorana_to_pauli
from .syk import SykHamiltonian, SykParams, build_hamiltonian
from .circuit import Circuit, Gate
from .statevector import Statevector, simulate
from .oracle import exact_evolve, purity, reduced_density_matrix, renyi_entropy, von_neumann_entropy
from .trotter import TrotterPlan, build_trotter_circuit, count_gates
from .protocols import EntropyEstimate, RandomizedMeasurementJob, SwapMbiJob, run_randomized_measurement, run_swap_mbi
from .noise import NoiseModel
from .mitigation import MitigationConfig
from .executor import CampaignSpec, ExecutorBackend, pack, run_campaign

__version__ = "0.1.0"

__all__ = [
    "PauliString", "majorana_to_pauli", "SykHamiltonian", "SykParams", "build_hamiltonian",
    "Circuit", "Gate", "Statevector", "simulate", "exact_evolve", "purity",
    "reduced_density_matrix", "renyi_entropy", "von_neumann_entropy", "TrotterPlan",
    "build_trotter_circuit", "count_gates", "EntropyEstimate", "RandomizedMeasurementJob",
    "SwapMbiJob", "run_randomized_measurement", "run_swap_mbi", "NoiseModel",
    "MitigationConfig", "CampaignSpec", "ExecutorBackend", "pack", "run_campaign",
]
