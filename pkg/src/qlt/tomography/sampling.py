"""Single-shot cost samples for gates substituted into one slot of a circuit."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from qlt.circuit import Circuit, GateSlot, Hamiltonian
from qlt.environment import EnvironmentTensor, contract_many
from qlt.tomography.design import GateSet


@dataclass
class ShotBatch:
    """Pairs ``(gate_index, value)``; ``gate_index`` points into a :class:`GateSet`."""

    gate_index: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.gate_index = np.asarray(self.gate_index, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=float)
        if self.gate_index.shape != self.values.shape:
            raise ValueError("gate_index and values must have the same length")

    def __len__(self) -> int:
        return len(self.values)

    def per_gate_means(self, n_gates: int) -> np.ndarray:
        counts = np.bincount(self.gate_index, minlength=n_gates)
        sums = np.bincount(self.gate_index, weights=self.values, minlength=n_gates)
        with np.errstate(invalid="ignore", divide="ignore"):
            return sums / counts


def shot_schedule(gs: GateSet, n_shots: int, rng: np.random.Generator) -> np.ndarray:
    if n_shots < 0:
        raise ValueError("n_shots must be >= 0")
    if gs.mode == "cycle":
        return np.arange(n_shots, dtype=np.int64) % len(gs)
    return rng.integers(len(gs), size=n_shots)


def collect_samples(
    c: Circuit,
    h: Hamiltonian,
    gate_index: int,
    gs: GateSet,
    n_shots: int,
    rng: np.random.Generator,
    slot: GateSlot | None = None,
) -> ShotBatch:
    """One single-shot sample per shot, the gate picked according to ``gs.mode``.

    ``slot`` may be passed to reuse the precomputed slot states across calls.
    """
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    slot = GateSlot(c, h, gate_index) if slot is None else slot
    if slot.k != gs.k:
        raise ValueError(f"gate set acts on {gs.k} qubits, slot gate on {slot.k}")
    idx = shot_schedule(gs, n_shots, rng)
    values = slot.sample(gs.gates, idx, rng)
    return ShotBatch(idx, values, {"gate_index": gate_index, "n_shots": n_shots})


def exact_samples(e: EnvironmentTensor, gs: GateSet, repeats: int = 1) -> ShotBatch:
    """Noiseless 'samples': the exact cost of every gate, ``repeats`` times in cycle order."""
    f = contract_many(e, gs.gates)
    idx = np.tile(np.arange(len(gs)), repeats)
    return ShotBatch(idx, f[idx], {"noiseless": True})
