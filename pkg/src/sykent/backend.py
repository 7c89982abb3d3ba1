"""In-process statevector backend used by the protocol drivers."""

from __future__ import annotations

from typing import Sequence

from .circuit import Circuit
from .noise import NoiseModel, apply_noise, noisy_probabilities
from .statevector import exact_probabilities, run_circuit
from .trotter import decompose, is_decomposed


class SimulatorBackend:
    """Runs circuits one by one; noisy runs decompose composite gates first."""

    def __init__(self, noise: NoiseModel | None = None, trajectories: int | None = 64,
                 exact_trajectories: int = 256):
        self.noise = None if noise is None or noise.is_noiseless else noise
        self.trajectories = trajectories
        self.exact_trajectories = exact_trajectories

    def _physical(self, circuit: Circuit) -> Circuit:
        return circuit if is_decomposed(circuit) else decompose(circuit)

    def run_one(self, circuit: Circuit, shots: int, seed: int) -> dict[str, int]:
        if self.noise is None:
            return run_circuit(circuit, shots, seed)
        return apply_noise(self._physical(circuit), self.noise, shots, seed, self.trajectories)

    def run(self, circuits: Sequence[Circuit], shots: int, seeds: Sequence[int]) -> list[dict[str, int]]:
        if len(circuits) != len(seeds):
            raise ValueError("need one seed per circuit")
        return [self.run_one(c, shots, s) for c, s in zip(circuits, seeds)]

    def probabilities(self, circuits: Sequence[Circuit], seed: int = 0) -> list[dict[str, float]]:
        if self.noise is None:
            return [exact_probabilities(c) for c in circuits]
        return [noisy_probabilities(self._physical(c), self.noise, self.exact_trajectories, seed) for c in circuits]
