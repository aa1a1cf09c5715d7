"""Tableaux-based tomography with Clifford covers of the Pauli-pair space.

A Clifford ``U0`` pairs every string ``sigma_j`` with ``sigma_i ~ U0 sigma_j U0^dagger``.
The ``4**k`` gates ``P_m U0`` probe exactly these pairs, and for them

    f(P_m U0) = sum_p S[m, p] e_{i_p j_p},   S[m, p] = (1/d) tr(sigma_i P_m U0 sigma_j U0^dagger P_m) = +-1

with ``S S^T = 4**k I``, so ``e = S^T f / 4**k``.  A cover is a list of such
``U0`` whose pairings jointly contain all ``(4**k - 1)**2`` non-identity pairs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

from qlt.circuit import Circuit, GateSlot, Hamiltonian
from qlt.clifford import (
    CliffordTableau,
    format_circuit,
    parse_circuit,
    random_clifford,
    tableau_from_circuit,
    tableau_to_unitary,
)
from qlt.environment import horizontal_reconstruct
from qlt.pauli import all_paulis, pauli_commutes, pauli_matrices
from qlt.tomography.design import GateSet, Reconstruction


class CoverError(ValueError):
    """A cover does not reach every non-identity pair."""


class CoverIntegrityError(RuntimeError):
    """Shipped cover data failed verification."""


@dataclass(frozen=True, eq=False)
class TableauxGroup:
    tableau: CliffordTableau
    gates: np.ndarray  # (4**k, d, d), gate m is P_m U0
    pairs: tuple  # ((i_p, j_p), ...) ordered by j_p
    sign_matrix: np.ndarray  # (4**k, 4**k) of +-1


def tableaux_group(u0: CliffordTableau) -> TableauxGroup:
    k = u0.k
    if k > 2:
        raise ValueError("tableaux groups are supported for k <= 2")
    paulis = all_paulis(k)
    target, sign = u0.pauli_action
    pairs = tuple((int(target[j]), j) for j in range(len(paulis)))
    anti = np.array(
        [[not pauli_commutes(pm, paulis[i]) for i, _ in pairs] for pm in paulis], dtype=np.int64
    )
    s = sign[None, :] * (1 - 2 * anti)
    u = tableau_to_unitary(u0)
    gates = np.einsum("mab,bc->mac", pauli_matrices(k), u)
    return TableauxGroup(u0, gates, pairs, s)


def pair_ids(u0: CliffordTableau) -> np.ndarray:
    """Flat ids ``i * 4**k + j`` of the non-identity pairs probed by ``U0``."""
    target, _ = u0.pauli_action
    n = len(target)
    j = np.arange(1, n)
    return target[1:] * n + j


@dataclass(eq=False)
class CliffordCover:
    k: int
    groups: list
    circuits: list | None = None
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.groups)

    @property
    def n_gates(self) -> int:
        return len(self.groups) * 4**self.k

    def multiplicity(self) -> np.ndarray:
        """How often every pair ``(i, j)`` is probed, shape ``(4**k, 4**k)``."""
        n = 4**self.k
        mult = np.zeros(n * n, dtype=np.int64)
        for t in self.groups:
            np.add.at(mult, pair_ids(t), 1)
        mult = mult.reshape(n, n)
        mult[0, 0] = len(self.groups)
        return mult

    def missing_pairs(self) -> list:
        mult = self.multiplicity()
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(mult[1:, 1:] == 0))]

    def is_complete(self) -> bool:
        return not self.missing_pairs()

    def verify(self) -> None:
        missing = [(i + 1, j + 1) for i, j in self.missing_pairs()]
        if missing:
            raise CoverError(f"cover misses {len(missing)} pairs, e.g. {missing[:5]}")

    def cnot_counts(self) -> list | None:
        if self.circuits is None:
            return None
        return [sum(1 for g in parse_circuit(c) if g[0] == "CNOT") for c in self.circuits]

    @cached_property
    def expanded(self) -> list:
        return [tableaux_group(t) for t in self.groups]

    def gate_set(self) -> GateSet:
        gates = np.concatenate([g.gates for g in self.expanded])
        labels = tuple(gi for gi in range(len(self.groups)) for _ in range(4**self.k))
        cn = self.cnot_counts()
        cnots = None if cn is None else tuple(c for c in cn for _ in range(4**self.k))
        return GateSet(self.k, gates, "cycle", labels, cnots)

    def predicted_overhead(self) -> float:
        """``traceInvPseudo`` of the cover gate set divided by the 2-design value."""
        mult = self.multiplicity()
        g = len(self.groups)
        relevant = mult[1:, 1:]
        tip = 1.0 + float(np.sum(g / relevant))
        d2 = 4**self.k
        return tip / (1 + (d2 - 1) ** 3)

    # serialization -----------------------------------------------------

    def to_json(self) -> dict:
        if self.circuits is not None:
            groups = [{"circuit": c, "cnot_count": n} for c, n in zip(self.circuits, self.cnot_counts())]
        else:
            groups = [{"images": [str(p) for p in t.images]} for t in self.groups]
        return {"k": self.k, "provenance": self.provenance, "groups": groups}

    @classmethod
    def from_json(cls, data: dict) -> "CliffordCover":
        k = int(data["k"])
        tabs, circs = [], []
        for g in data["groups"]:
            if "circuit" in g:
                tabs.append(tableau_from_circuit(k, g["circuit"]))
                circs.append(g["circuit"])
            else:
                from qlt.pauli import PauliString

                tabs.append(CliffordTableau(k, tuple(PauliString.from_str(s) for s in g["images"])))
        cover = cls(k, tabs, circs if len(circs) == len(tabs) else None, dict(data.get("provenance", {})))
        cover.verify()
        return cover

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "CliffordCover":
        return cls.from_json(json.loads(Path(path).read_text()))


def _groups_checksum(groups: list) -> str:
    return hashlib.sha256(json.dumps(groups, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def builtin_cover_2q() -> CliffordCover:
    """The reference 17-group, 272-gate cover; verified on every load."""
    raw = json.loads(resources.files("qlt.data").joinpath("cover_2q.json").read_text())
    if _groups_checksum(raw["groups"]) != raw["sha256"]:
        raise CoverIntegrityError("cover_2q.json checksum mismatch")
    tabs = [tableau_from_circuit(2, g["circuit"]) for g in raw["groups"]]
    circuits = [g["circuit"] for g in raw["groups"]]
    cover = CliffordCover(2, tabs, circuits, {"source": "builtin", "convention": raw["convention"]})
    if not cover.is_complete():
        raise CoverIntegrityError(f"builtin cover incomplete: {cover.missing_pairs()[:5]}")
    if cover.cnot_counts() != [g["cnot_count"] for g in raw["groups"]]:
        raise CoverIntegrityError("builtin cover CNOT counts do not match their circuits")
    return cover


def builtin_cover_1q() -> CliffordCover:
    """Three groups: identity and the two cyclic permutations of (X, Y, Z)."""
    circuits = ["", "H0 S0", "H0 S0 H0 S0"]
    cover = CliffordCover(1, [tableau_from_circuit(1, c) for c in circuits], circuits, {"source": "builtin"})
    cover.verify()
    return cover


def greedy_cover_search(
    k: int, pool_size: int, restarts: int, rng: np.random.Generator
) -> CliffordCover:
    """Greedy minimal-overlap cover search over a pool of random Cliffords.

    One pool is drawn per call and shared by all restarts.  Each step adds a
    uniformly chosen candidate among those with the smallest overlap with
    the pairs covered so far (candidates adding nothing are skipped).
    """
    if k > 2:
        raise ValueError("greedy cover search supports k <= 2")
    if pool_size < 1 or restarts < 1:
        raise ValueError("pool_size and restarts must be >= 1")
    n = 4**k
    pool = [random_clifford(k, rng) for _ in range(pool_size)]
    ids = np.stack([pair_ids(t) for t in pool])
    best: list | None = None
    for _ in range(restarts):
        covered = np.zeros(n * n, dtype=bool)
        covered[:n] = True  # pairs with i = 0 ...
        covered[::n] = True  # ... or j = 0 are not targets
        chosen: list[int] = []
        extra: list[CliffordTableau] = []
        while not covered.all():
            overlap = covered[ids].sum(axis=1)
            useful = overlap < n - 1
            if useful.any():
                lowest = overlap[useful].min()
                cands = np.flatnonzero(useful & (overlap == lowest))
                pick = int(cands[rng.integers(len(cands))])
                chosen.append(pick)
                covered[ids[pick]] = True
            else:  # pool exhausted: draw fresh candidates until one helps
                t = random_clifford(k, rng)
                pid = pair_ids(t)
                if not covered[pid].all():
                    extra.append(t)
                    chosen.append(-len(extra))
                    covered[pid] = True
        groups = [pool[c] if c >= 0 else extra[-c - 1] for c in chosen]
        if best is None or len(groups) < len(best):
            best = groups
    cover = CliffordCover(
        k, best, None, {"source": "greedy", "pool_size": pool_size, "restarts": restarts}
    )
    cover.verify()
    return cover


# ------------------------------------------------------------------ estimation


def tableaux_estimate(cover: CliffordCover, f_hat: np.ndarray) -> np.ndarray:
    """Horizontal coefficients from per-gate cost estimates (ordered as ``cover.gate_set()``)."""
    cover.verify()
    n = 4**cover.k
    f_hat = np.asarray(f_hat, dtype=float).reshape(len(cover), n)
    total = np.zeros((n, n))
    count = np.zeros((n, n))
    for grp, f in zip(cover.expanded, f_hat):
        e_sub = grp.sign_matrix.T @ f / n
        i, j = np.array(grp.pairs).T
        total[i, j] += e_sub
        count[i, j] += 1
    with np.errstate(invalid="ignore"):
        return np.where(count > 0, total / np.maximum(count, 1), 0.0)


def tableaux_tomography(
    c: Circuit,
    h: Hamiltonian,
    gate_index: int,
    cover: CliffordCover,
    shots_per_circuit: int,
    rng: np.random.Generator,
    slot: GateSlot | None = None,
) -> Reconstruction:
    """Average ``shots_per_circuit`` single shots per cover gate, invert each group, average pairs."""
    missing = cover.missing_pairs()
    if missing:
        raise CoverError(f"cover misses pairs {missing[:10]}")
    if shots_per_circuit < 1:
        raise ValueError("shots_per_circuit must be >= 1")
    slot = GateSlot(c, h, gate_index) if slot is None else slot
    if slot.k != cover.k:
        raise ValueError("cover and gate slot act on different qubit counts")
    gs = cover.gate_set()
    idx = np.repeat(np.arange(len(gs)), shots_per_circuit)
    values = slot.sample(gs.gates, idx, rng)
    f_hat = values.reshape(len(gs), shots_per_circuit).mean(axis=1)
    coeff = tableaux_estimate(cover, f_hat)
    return Reconstruction(
        horizontal_reconstruct(coeff),
        shots_used=len(idx),
        gates_used=len(gs),
        diagnostics={"estimator": "tableaux", "groups": len(cover), "predicted_overhead": cover.predicted_overhead()},
    )


__all__ = [
    "CliffordCover",
    "CoverError",
    "CoverIntegrityError",
    "TableauxGroup",
    "builtin_cover_1q",
    "builtin_cover_2q",
    "format_circuit",
    "greedy_cover_search",
    "pair_ids",
    "tableaux_estimate",
    "tableaux_group",
    "tableaux_tomography",
]
