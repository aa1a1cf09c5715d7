"""Uniform (Haar or Clifford-group) landscape tomography.

Two estimators share the same samples.  ``regression`` solves the weighted
least-squares problem.  ``closed_form_shadow`` averages single-shot shadows
``f_s * conj(u_s u_s^dagger)`` and undoes the 2-design second moment, which
shrinks every non-constant direction by ``1 / (d**2 - 1)``.
"""

from __future__ import annotations

import numpy as np

from qlt.circuit import Circuit, GateSlot, Hamiltonian
from qlt.clifford import haar_random_unitaries
from qlt.environment import EnvironmentTensor, measurable_projection
from qlt.tomography.design import (
    Basis,
    GateSet,
    NormalEquations,
    Reconstruction,
    aggregate,
    design_rows,
)
from qlt.tomography.sampling import ShotBatch, shot_schedule

SOURCES = ("haar", "clifford_group")
ESTIMATORS = ("regression", "closed_form_shadow")
CHUNK = 50_000


class ShadowAccumulator:
    """Running sum of single-shot shadows."""

    def __init__(self, k: int):
        d2 = 1 << (2 * k)
        self.k = k
        self.total = np.zeros((d2, d2), dtype=np.complex128)
        self.shots = 0
        self.gates = 0

    def add(self, gates: np.ndarray, counts: np.ndarray, sums: np.ndarray) -> None:
        flat = np.asarray(gates).reshape(len(gates), -1)
        self.total += (flat.conj() * np.asarray(sums)[:, None]).T @ flat
        self.shots += int(np.sum(counts))
        self.gates += int(np.count_nonzero(counts))

    def solve(self) -> Reconstruction:
        d = 1 << self.k
        if self.shots == 0:
            return Reconstruction(EnvironmentTensor.zeros(self.k), 0, 0, {})
        s = self.total / self.shots
        const = np.trace(s) / (d * d) * np.eye(d * d)
        est = (d * d - 1) * (s - const) + const
        return Reconstruction(
            measurable_projection(EnvironmentTensor(est)),
            self.shots,
            self.gates,
            {"estimator": "closed_form_shadow"},
        )


def shadow_estimate(gs: GateSet, samples: ShotBatch) -> Reconstruction:
    """Closed-form shadow estimate from existing samples."""
    acc = ShadowAccumulator(gs.k)
    counts, sums, _ = aggregate(samples.gate_index, samples.values, len(gs))
    used = counts > 0
    acc.add(gs.gates[used], counts[used], sums[used])
    return acc.solve()


def uniform_tomography(
    c: Circuit,
    h: Hamiltonian,
    gate_index: int,
    n_shots: int,
    source: str = "clifford_group",
    estimator: str = "regression",
    rng: np.random.Generator | None = None,
    slot: GateSlot | None = None,
) -> Reconstruction:
    """Uniform landscape tomography of one gate slot.

    ``clifford_group`` cycles through the full group (one shot per gate per
    pass), ``haar`` draws a fresh Haar-random gate for every shot.  Haar runs
    are streamed in chunks so memory stays bounded at 10**6 shots.
    """
    if source not in SOURCES:
        raise ValueError(f"source must be one of {SOURCES}")
    if estimator not in ESTIMATORS:
        raise ValueError(f"estimator must be one of {ESTIMATORS}")
    rng = np.random.default_rng() if rng is None else rng
    slot = GateSlot(c, h, gate_index) if slot is None else slot
    k = slot.k
    if source == "clifford_group" and k > 2:
        raise ValueError("the Clifford-group source supports k <= 2")
    basis = Basis.horizontal(k)
    acc = NormalEquations(basis) if estimator == "regression" else ShadowAccumulator(k)

    if source == "clifford_group":
        gs = GateSet.clifford_group(k)
        idx = shot_schedule(gs, n_shots, rng)
        values = slot.sample(gs.gates, idx, rng)
        counts, sums, sq = aggregate(idx, values, len(gs))
        used = np.flatnonzero(counts)
        _add(acc, basis, gs.gates[used], counts[used], sums[used], sq)
    else:
        done = 0
        while done < n_shots:
            m = min(CHUNK, n_shots - done)
            gates = haar_random_unitaries(1 << k, m, rng)
            values = slot.sample(gates, np.arange(m), rng)
            _add(acc, basis, gates, np.ones(m), values, float(values @ values))
            done += m
    rec = acc.solve()
    rec.diagnostics.update({"source": source, "estimator": estimator})
    return rec


def _add(acc, basis, gates, counts, sums, sq):
    if isinstance(acc, NormalEquations):
        acc.add(design_rows(gates, basis), counts, sums, sq)
    else:
        acc.add(gates, counts, sums)
