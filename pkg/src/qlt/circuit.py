"""Dense statevector simulation of layered circuits and shot sampling."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from qlt import _kernels
from qlt.clifford import haar_random_unitary
from qlt.pauli import PauliString

MAX_QUBITS = 14
_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
_SDG = np.diag([1, -1j]).astype(np.complex128)
_ROTATION = {"X": _H, "Y": _H @ _SDG}


class CircuitSizeError(ValueError):
    pass


def _check_unitary(u: np.ndarray, tol: float = 1e-10) -> None:
    d = u.shape[0]
    if u.shape != (d, d) or np.linalg.norm(u.conj().T @ u - np.eye(d)) > tol:
        raise ValueError("matrix is not unitary")


@dataclass(frozen=True, eq=False)
class Gate:
    """A dense gate on an ordered tuple of qubits (first qubit = leftmost kron factor)."""

    matrix: np.ndarray
    support: tuple

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "support", tuple(int(q) for q in self.support))
        if len(set(self.support)) != len(self.support):
            raise ValueError("repeated qubit in gate support")
        if m.shape != (2 ** len(self.support),) * 2:
            raise ValueError(f"gate of shape {m.shape} does not match support {self.support}")

    @property
    def k(self) -> int:
        return len(self.support)

    def __eq__(self, other):
        return (
            isinstance(other, Gate)
            and self.support == other.support
            and np.array_equal(self.matrix, other.matrix)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Circuit:
    """Ordered gate list acting on ``|0...0>``; ``gates[0]`` acts first."""

    n: int
    gates: tuple = ()

    def __post_init__(self):
        gates = tuple(g if isinstance(g, Gate) else Gate(*g) for g in self.gates)
        for g in gates:
            if any(not 0 <= q < self.n for q in g.support):
                raise ValueError(f"gate support {g.support} outside [0, {self.n})")
        object.__setattr__(self, "gates", gates)

    def __len__(self) -> int:
        return len(self.gates)

    def __eq__(self, other):
        return (
            isinstance(other, Circuit)
            and self.n == other.n
            and len(self.gates) == len(other.gates)
            and all(a == b for a, b in zip(self.gates, other.gates))
        )

    __hash__ = None

    def append(self, matrix, support) -> "Circuit":
        return Circuit(self.n, self.gates + (Gate(matrix, support),))


def substitute_gate(c: Circuit, index: int, u: np.ndarray) -> Circuit:
    """Copy of ``c`` with the gate at ``index`` replaced by ``u`` (same support)."""
    if not 0 <= index < len(c.gates):
        raise IndexError(f"gate index {index} out of range")
    old = c.gates[index]
    u = np.asarray(u)
    if u.shape != old.matrix.shape:
        raise ValueError(f"gate shape {u.shape} does not match support {old.support}")
    gates = list(c.gates)
    gates[index] = Gate(u, old.support)
    return Circuit(c.n, tuple(gates))


def staircase_ansatz(n: int, layers: int, rng: np.random.Generator) -> Circuit:
    """``layers`` staircases of Haar-random 2-qubit gates on (0,1), (1,2), ..."""
    if n < 2:
        raise ValueError("staircase ansatz needs n >= 2")
    gates = []
    for _ in range(layers):
        for q in range(n - 1):
            gates.append(Gate(haar_random_unitary(4, rng), (q, q + 1)))
    return Circuit(n, tuple(gates))


def zero_state(n: int, batch: int = 1) -> np.ndarray:
    psi = np.zeros((batch, 1 << n), dtype=np.complex128)
    psi[:, 0] = 1.0
    return psi


def evolve(states: np.ndarray, gates: Sequence[Gate], n: int) -> np.ndarray:
    """Apply ``gates`` in order to a batch of states of shape ``(B, 2**n)``."""
    for g in gates:
        states = _kernels.apply_gate(states, g.matrix, g.support, n)
    return states


def run_circuit(c: Circuit) -> np.ndarray:
    """Final statevector ``U_circ |0...0>``."""
    if c.n > MAX_QUBITS:
        raise CircuitSizeError(f"n={c.n} exceeds the dense limit of {MAX_QUBITS}")
    return evolve(zero_state(c.n), c.gates, c.n)[0]


# ------------------------------------------------------------------ Hamiltonian


def _qubitwise_basis(n: int, strings: Sequence[PauliString]) -> str | None:
    basis = ["I"] * n
    for p in strings:
        for q, ch in enumerate(p.letters):
            if ch == "I":
                continue
            if basis[q] not in ("I", ch):
                return None
            basis[q] = ch
    return "".join(basis)


@dataclass(frozen=True)
class Hamiltonian:
    """Real-weighted Pauli sum with a partition into product measurement bases.

    ``group_probabilities`` are the probabilities with which a single shot
    measures each group; shot values are rescaled by ``1 / p_g``.
    """

    n: int
    terms: tuple
    groups: tuple = None
    group_probabilities: tuple = None

    def __post_init__(self):
        terms = []
        for coeff, p in self.terms:
            if isinstance(p, str):
                p = PauliString.from_str(p)
            if p.k != self.n:
                raise ValueError(f"term {p} does not act on {self.n} qubits")
            if not p.is_hermitian:
                raise ValueError(f"term {p} is not Hermitian")
            terms.append((float(coeff), p))
        object.__setattr__(self, "terms", tuple(terms))
        groups = self.groups
        if groups is None:
            groups = self._greedy_groups()
        groups = tuple(tuple(int(t) for t in g) for g in groups)
        flat = sorted(t for g in groups for t in g)
        if flat != list(range(len(terms))):
            raise ValueError("every term must belong to exactly one group")
        for g in groups:
            if _qubitwise_basis(self.n, [terms[t][1] for t in g]) is None:
                raise ValueError(f"group {g} is not qubit-wise compatible")
        object.__setattr__(self, "groups", groups)
        probs = self.group_probabilities
        if probs is None:
            probs = (1.0 / len(groups),) * len(groups)
        probs = tuple(float(p) for p in probs)
        if len(probs) != len(groups) or min(probs) <= 0 or abs(sum(probs) - 1) > 1e-12:
            raise ValueError("group probabilities must be positive and sum to one")
        object.__setattr__(self, "group_probabilities", probs)

    def _greedy_groups(self):
        groups: list[list[int]] = []
        for t, (_, p) in enumerate(self.terms):
            for g in groups:
                if _qubitwise_basis(self.n, [self.terms[s][1] for s in g] + [p]) is not None:
                    g.append(t)
                    break
            else:
                groups.append([t])
        return groups

    @classmethod
    def ising(cls, n: int, jz: float = 1.0, hx: float = 0.5) -> "Hamiltonian":
        """Open chain ``sum_n jz Z_n Z_{n+1} - hx X_n`` measured in the Z and X product bases."""
        terms = []
        for q in range(n - 1):
            terms.append((jz, "I" * q + "ZZ" + "I" * (n - q - 2)))
        for q in range(n):
            terms.append((-hx, "I" * q + "X" + "I" * (n - q - 1)))
        zz = tuple(range(n - 1))
        xx = tuple(range(n - 1, 2 * n - 1))
        groups = (zz, xx) if n > 1 else (xx,)
        return cls(n, tuple(terms), groups)

    @classmethod
    def zero_projector(cls, n: int) -> "Hamiltonian":
        """``|0...0><0...0|`` written as the Pauli sum ``prod_q (I + Z_q) / 2``."""
        terms = []
        for mask in range(1 << n):
            letters = "".join("Z" if (mask >> (n - 1 - q)) & 1 else "I" for q in range(n))
            terms.append((2.0**-n, letters))
        return cls(n, tuple(terms), (tuple(range(1 << n)),))

    def with_probabilities(self, probs) -> "Hamiltonian":
        return Hamiltonian(self.n, self.terms, self.groups, tuple(probs))

    def basis(self, g: int) -> str:
        """Per-qubit measurement letter of group ``g`` (``I`` means measure Z)."""
        return _qubitwise_basis(self.n, [self.terms[t][1] for t in self.groups[g]])

    def group_values(self, g: int) -> np.ndarray:
        """Eigenvalue of the group's partial sum for every measured bitstring."""
        masks = [self.terms[t][1].x | self.terms[t][1].z for t in self.groups[g]]
        weights = [self.terms[t][0] * self.terms[t][1].sign for t in self.groups[g]]
        return _kernels.term_values(self.n, masks, weights)

    @cached_property
    def _values(self) -> tuple:
        return tuple(self.group_values(g) for g in range(len(self.groups)))

    def rotate_to_basis(self, states: np.ndarray, g: int) -> np.ndarray:
        for q, ch in enumerate(self.basis(g)):
            if ch in _ROTATION:
                states = _kernels.apply_gate(states, _ROTATION[ch], (q,), self.n)
        return states

    def apply(self, states: np.ndarray) -> np.ndarray:
        """``H`` applied to every row of ``states``."""
        out = np.zeros_like(states)
        for coeff, p in self.terms:
            out += coeff * _kernels.pauli_apply(states, p.x, p.z, p.phase, self.n)
        return out

    def matrix(self, sparse: bool = False):
        dim = 1 << self.n
        if sparse:
            rows, cols, vals = [], [], []
            b = np.arange(dim, dtype=np.int64)
            for coeff, p in self.terms:
                col_states = _kernels.pauli_apply(np.ones((1, dim), dtype=np.complex128), p.x, p.z, p.phase, self.n)[0]
                # (P|b>) lives at b ^ x with coefficient col_states[b ^ x]
                rows.append(b ^ p.x)
                cols.append(b)
                vals.append(coeff * col_states[b ^ p.x])
            return scipy.sparse.csr_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
            )
        return self.apply(np.eye(dim, dtype=np.complex128)).T

    # -------------------------------------------------------------- JSON

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "terms": [{"coeff": c, "pauli": str(p).lstrip("+")} for c, p in self.terms],
            "groups": [list(g) for g in self.groups],
            "group_probabilities": list(self.group_probabilities),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Hamiltonian":
        terms = tuple((t["coeff"], t["pauli"]) for t in data["terms"])
        groups = data.get("groups")
        probs = data.get("group_probabilities")
        return cls(int(data["n"]), terms, groups, None if probs is None else tuple(probs))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "Hamiltonian":
        return cls.from_json(json.loads(Path(path).read_text()))


def expectation(states: np.ndarray, h: Hamiltonian) -> np.ndarray:
    """``<psi|H|psi>`` for each row; the imaginary residue is checked and dropped."""
    vals = np.einsum("bx,bx->b", states.conj(), h.apply(states))
    if np.max(np.abs(vals.imag), initial=0.0) > 1e-9:
        raise ArithmeticError("non-Hermitian expectation value")
    return vals.real


def exact_energy(c: Circuit, h: Hamiltonian) -> float:
    if c.n != h.n:
        raise ValueError("circuit and Hamiltonian act on different qubit counts")
    return float(expectation(run_circuit(c)[None, :], h)[0])


def exact_ground_energy(h: Hamiltonian) -> float:
    """Smallest eigenvalue of the Hamiltonian (dense up to n=10, Lanczos above)."""
    if h.n > 12:
        raise CircuitSizeError("ground-state diagonalization is limited to n <= 12")
    if h.n <= 10:
        return float(np.linalg.eigvalsh(h.matrix())[0])
    val = scipy.sparse.linalg.eigsh(h.matrix(sparse=True), k=1, which="SA", return_eigenvectors=False)
    return float(val[0])


def _sample_from_probs(probs: np.ndarray, rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(probs, axis=1)
    cdf /= cdf[:, -1:]
    return _kernels.sample_rows(cdf, rows, rng.random(rows.shape[0]))


def single_shot_sample(c: Circuit, h: Hamiltonian, rng: np.random.Generator, shots: int | None = None):
    """One unbiased single-shot estimate of the energy (or an array of ``shots`` of them)."""
    psi = run_circuit(c)[None, :]
    size = 1 if shots is None else shots
    gsel = rng.choice(len(h.groups), size=size, p=h.group_probabilities)
    out = np.empty(size)
    for g in range(len(h.groups)):
        sel = np.flatnonzero(gsel == g)
        if sel.size == 0:
            continue
        probs = np.abs(h.rotate_to_basis(psi, g)) ** 2
        bits = _sample_from_probs(probs, np.zeros(sel.size, dtype=np.int64), rng)
        out[sel] = h._values[g][bits] / h.group_probabilities[g]
    return float(out[0]) if shots is None else out


# ------------------------------------------------------------------ gate slot


class GateSlot:
    """Linear view of a circuit as a function of one gate.

    For the gate at ``index`` with support of size ``k`` this keeps the
    ``d**2`` output states obtained by substituting each matrix unit
    ``|o><i|`` (row-major ``o * d + i``).  The output state for a
    substituted matrix ``A`` is then ``A.ravel() @ chi``.
    """

    def __init__(self, c: Circuit, h: Hamiltonian, index: int):
        if c.n != h.n:
            raise ValueError("circuit and Hamiltonian act on different qubit counts")
        if not 0 <= index < len(c.gates):
            raise IndexError(f"gate index {index} out of range")
        if c.n > MAX_QUBITS:
            raise CircuitSizeError(f"n={c.n} exceeds the dense limit of {MAX_QUBITS}")
        self.circuit = c
        self.hamiltonian = h
        self.index = index
        gate = c.gates[index]
        self.support = gate.support
        self.k = gate.k
        self.d = 1 << self.k
        n = c.n
        pre = evolve(zero_state(n), c.gates[:index], n)
        units = np.zeros((self.d * self.d, self.d, self.d), dtype=np.complex128)
        for a in range(self.d * self.d):
            units[a, a // self.d, a % self.d] = 1.0
        chi = np.concatenate([_kernels.apply_gate(pre, u, self.support, n) for u in units])
        self.chi = evolve(chi, c.gates[index + 1 :], n)
        self._rotated: dict[int, np.ndarray] = {}

    @property
    def gate(self) -> np.ndarray:
        return self.circuit.gates[self.index].matrix

    def states(self, us: np.ndarray) -> np.ndarray:
        us = np.asarray(us).reshape(-1, self.d * self.d)
        return us @ self.chi

    def environment_matrix(self) -> np.ndarray:
        """``d**2 x d**2`` Hermitian matrix ``Emat[(o1,i1),(o2,i2)]``."""
        hchi = self.hamiltonian.apply(self.chi)
        return (self.chi.conj() @ hchi.T).T

    def energies(self, us: np.ndarray) -> np.ndarray:
        return expectation(self.states(us), self.hamiltonian)

    def rotated(self, g: int) -> np.ndarray:
        if g not in self._rotated:
            self._rotated[g] = self.hamiltonian.rotate_to_basis(self.chi, g)
        return self._rotated[g]

    def sample(self, us: np.ndarray, gate_rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """One single-shot value per entry of ``gate_rows`` (indices into ``us``)."""
        us = np.asarray(us).reshape(-1, self.d * self.d)
        h = self.hamiltonian
        gate_rows = np.asarray(gate_rows, dtype=np.int64)
        gsel = rng.choice(len(h.groups), size=gate_rows.size, p=h.group_probabilities)
        out = np.empty(gate_rows.size)
        for g in range(len(h.groups)):
            sel = np.flatnonzero(gsel == g)
            if sel.size == 0:
                continue
            used, inverse = np.unique(gate_rows[sel], return_inverse=True)
            probs = np.abs(us[used] @ self.rotated(g)) ** 2
            bits = _sample_from_probs(probs, inverse, rng)
            out[sel] = h._values[g][bits] / h.group_probabilities[g]
        return out
