"""Environment tensors of single gates and the reduced bilinear cost.

Index convention.  ``E[i1, o1, i2, o2]`` with every index of size ``d = 2**k``.
For matrices ``U`` and ``V``

    contract(E, U, V) = sum E[i1, o1, i2, o2] * U[o1, i1] * V[i2, o2]

and the physical cost of a unitary gate is ``f(U) = contract(E, U, U^dagger)``.
Internally the tensor is stored as the ``d**2 x d**2`` matrix

    Emat[(o1, i1), (o2, i2)] = E[i1, o1, i2, o2]      (row-major pairs)

so that ``f(U) = u^T Emat conj(u)`` with ``u = U.ravel()``.  For a physical
circuit ``Emat`` is Hermitian.

Horizontal basis.  The pair ``(sigma_i, sigma_j)`` of Pauli strings is the
tensor ``B^{ij}[i1, o1, i2, o2] = sigma_i[o2, o1] * sigma_j[i1, i2]`` which
contracts to ``tr(sigma_i U sigma_j U^dagger)``.  Coefficients are defined by
``E = (1/d) sum e_ij B^{ij}``, hence ``f(U) = (1/d) sum e_ij tr(sigma_i U sigma_j U^dagger)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from pathlib import Path

import numpy as np

from qlt.circuit import Circuit, GateSlot, Hamiltonian
from qlt.clifford import tableau_from_circuit, tableau_to_unitary
from qlt.pauli import DimensionError, PauliString, pauli_matrices

HERMITIAN_TOL = 1e-9

CONVENTION = (
    "Emat[(o1*d+i1),(o2*d+i2)] = E[i1,o1,i2,o2]; "
    "f(U) = sum E[i1,o1,i2,o2] U[o1,i1] conj(U[o2,i2])"
)


class EnvironmentTensor:
    """Rank-4 environment of a ``k``-qubit gate (see module docstring)."""

    __slots__ = ("k", "d", "matrix")

    def __init__(self, matrix: np.ndarray, k: int | None = None):
        m = np.array(matrix, dtype=np.complex128)
        d2 = m.shape[0]
        d = int(round(np.sqrt(d2)))
        if m.shape != (d2, d2) or d * d != d2 or d & (d - 1):
            raise DimensionError(f"environment matrix of shape {m.shape}")
        if k is not None and (1 << k) != d:
            raise DimensionError(f"matrix size {d2} does not match k={k}")
        m.setflags(write=False)
        self.k = d.bit_length() - 1
        self.d = d
        self.matrix = m

    @classmethod
    def from_tensor(cls, t: np.ndarray) -> "EnvironmentTensor":
        t = np.asarray(t)
        d = t.shape[0]
        return cls(t.transpose(1, 0, 3, 2).reshape(d * d, d * d))

    @classmethod
    def zeros(cls, k: int) -> "EnvironmentTensor":
        d = 1 << k
        return cls(np.zeros((d * d, d * d)))

    @classmethod
    def identity(cls, k: int) -> "EnvironmentTensor":
        """``E[i1,o1,i2,o2] = delta(i1,i2) delta(o1,o2)``: ``f(U) = d`` on unitaries."""
        d = 1 << k
        return cls(np.eye(d * d))

    @classmethod
    def random_hermitian(cls, k: int, rng: np.random.Generator) -> "EnvironmentTensor":
        d2 = 1 << (2 * k)
        a = rng.normal(size=(d2, d2)) + 1j * rng.normal(size=(d2, d2))
        return cls((a + a.conj().T) / 2)

    @property
    def tensor(self) -> np.ndarray:
        d = self.d
        return self.matrix.reshape(d, d, d, d).transpose(1, 0, 3, 2)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def __add__(self, other: "EnvironmentTensor") -> "EnvironmentTensor":
        return EnvironmentTensor(self.matrix + other.matrix)

    def __sub__(self, other: "EnvironmentTensor") -> "EnvironmentTensor":
        return EnvironmentTensor(self.matrix - other.matrix)

    def __mul__(self, s: float) -> "EnvironmentTensor":
        return EnvironmentTensor(self.matrix * s)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def __repr__(self) -> str:
        return f"EnvironmentTensor(k={self.k}, norm={self.norm():.6g})"

    # serialization -----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "convention": CONVENTION,
            "real": self.matrix.real.tolist(),
            "imag": self.matrix.imag.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "EnvironmentTensor":
        return cls(np.array(data["real"]) + 1j * np.array(data["imag"]), k=data["k"])

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path) -> "EnvironmentTensor":
        return cls.from_json(json.loads(Path(path).read_text()))


def _as_env(e) -> EnvironmentTensor:
    return e if isinstance(e, EnvironmentTensor) else EnvironmentTensor(e)


def exact_environment(c: Circuit, h: Hamiltonian, gate_index: int) -> EnvironmentTensor:
    """Exact environment of one gate, by matrix-unit substitution."""
    if c.n > 12:
        raise ValueError("exact environments are limited to n <= 12")
    if not 0 <= gate_index < len(c.gates):
        raise IndexError(f"gate index {gate_index} out of range")
    if c.gates[gate_index].k > 2:
        raise ValueError("exact environments are limited to gates with k <= 2")
    return EnvironmentTensor(GateSlot(c, h, gate_index).environment_matrix())


def contract(e, u: np.ndarray, v: np.ndarray | None = None):
    """Bilinear contraction; the symmetric call (``v`` omitted) returns a real float."""
    e = _as_env(e)
    u = np.asarray(u)
    if u.shape != (e.d, e.d) or (v is not None and np.shape(v) != (e.d, e.d)):
        raise DimensionError(f"gate shape {u.shape} does not match environment with d={e.d}")
    if v is None:
        val = u.ravel() @ e.matrix @ u.conj().ravel()
        if abs(val.imag) > HERMITIAN_TOL * max(1.0, abs(val.real)):
            raise ArithmeticError(f"symmetric contraction has imaginary part {val.imag:g}")
        return float(val.real)
    return complex(u.ravel() @ e.matrix @ np.asarray(v).T.ravel())


def contract_many(e, us: np.ndarray) -> np.ndarray:
    """``f(U)`` for a stack of gates of shape ``(N, d, d)``."""
    e = _as_env(e)
    flat = np.asarray(us).reshape(-1, e.d * e.d)
    return np.einsum("na,ab,nb->n", flat, e.matrix, flat.conj()).real


# ------------------------------------------------------------------ horizontal basis


def horizontal_decompose(e) -> np.ndarray:
    """Coefficients ``e_ij`` of shape ``(4**k, 4**k)``; real for Hermitian input."""
    e = _as_env(e)
    d = e.d
    s = pauli_matrices(e.k)
    m4 = e.matrix.reshape(d, d, d, d)  # [o1, i1, o2, i2]
    coeff = np.einsum("iba,jcd,acbd->ij", s.conj(), s.conj(), m4, optimize=True) / d
    if e.hermiticity_error() <= HERMITIAN_TOL * max(1.0, e.norm()):
        return coeff.real.copy()
    return coeff


def horizontal_reconstruct(coeff: np.ndarray) -> EnvironmentTensor:
    coeff = np.asarray(coeff)
    k = (coeff.shape[0].bit_length() - 1) // 2
    if coeff.shape != (4**k, 4**k):
        raise DimensionError(f"coefficient array of shape {coeff.shape}")
    d = 1 << k
    s = pauli_matrices(k)
    m4 = np.einsum("ij,iba,jcd->acbd", coeff, s, s, optimize=True) / d
    return EnvironmentTensor(m4.reshape(d * d, d * d))


def measurable_mask(k: int) -> np.ndarray:
    """Boolean mask of the pairs that affect ``f`` on unitaries."""
    m = np.ones((4**k, 4**k), dtype=bool)
    m[0, 1:] = False
    m[1:, 0] = False
    return m


def measurable_projection(e) -> EnvironmentTensor:
    """Drop the pairs with exactly one identity string (invisible to unitary probes)."""
    e = _as_env(e)
    coeff = horizontal_decompose(e)
    return horizontal_reconstruct(np.where(measurable_mask(e.k), coeff, 0))


# ------------------------------------------------------------------ counting


def count_relevant(k: int) -> int:
    if k < 1:
        raise ValueError("k must be >= 1")
    return (4**k - 1) ** 2 + 1


def count_cnot_limited(k: int, t: int, connectivity: str = "all_to_all") -> int:
    """Components measurable with at most ``t`` sequential CNOTs (all-to-all connectivity)."""
    if connectivity != "all_to_all":
        raise ValueError("only all_to_all connectivity has a closed form")
    if t < 0:
        raise ValueError("t must be >= 0")
    if k < 1:
        raise ValueError("k must be >= 1")
    if t == 0:
        return 10**k
    if t >= k:
        return count_relevant(k)
    total = Fraction(2)
    for l in range(t + 1):
        total += 6**l * comb(k, l) * (10 ** (k - l) - Fraction(1, 2) ** (l - 1))
    if total.denominator != 1:
        raise ArithmeticError(f"non-integer count {total}")
    return min(int(total), count_relevant(k))


def min_cnot_for_full_tomography(k: int, connectivity: str = "all_to_all") -> int:
    """Closed form ``k`` (all-to-all) or ``2k - 2`` (linear), returned as is; at k=1 it gives 1 / 0."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if connectivity == "all_to_all":
        return k
    if connectivity == "linear":
        return 2 * k - 2
    raise ValueError(f"unknown connectivity {connectivity!r}")


# ------------------------------------------------------------------ gates and derivatives


def _to_z0_circuit(p: PauliString) -> list:
    """Clifford circuit whose conjugation maps ``p`` to ``+Z`` on qubit 0."""
    gates = []
    support = []
    for q, ch in enumerate(p.letters):
        if ch == "X":
            gates.append(("H", q))
        elif ch == "Y":
            gates += [("SDG", q), ("H", q)]
        if ch != "I":
            support.append(q)
    a = support[0]
    for b in support[1:]:
        gates.append(("CNOT", b, a))
    if a != 0:
        gates += [("CNOT", a, 0), ("CNOT", 0, a), ("CNOT", a, 0)]
    image = tableau_from_circuit(p.k, gates).conjugate(p)
    if image.sign < 0:
        gates.append(("X", 0))
    return gates


def maximizing_gate(pi: PauliString, pj: PauliString) -> np.ndarray:
    """Unitary with ``U sigma_j U^dagger = sigma_i``, so ``tr(sigma_i U sigma_j U^dagger) = d``."""
    if pi.k != pj.k:
        raise DimensionError("Pauli strings on different qubit counts")
    if pi.is_identity or pj.is_identity:
        raise ValueError("the identity string has a constant trace; no maximizer exists")
    pi, pj = pi.unsigned(), pj.unsigned()
    vi = tableau_to_unitary(tableau_from_circuit(pi.k, _to_z0_circuit(pi)))
    vj = tableau_to_unitary(tableau_from_circuit(pj.k, _to_z0_circuit(pj)))
    return vi.conj().T @ vj


def env_gradient(e, u: np.ndarray) -> np.ndarray:
    """``G[o2,i2] = sum E[i1,o1,i2,o2] U[o1,i1]``; ``f(U) = Re tr(G^dagger U)``."""
    e = _as_env(e)
    return (e.matrix.T @ np.asarray(u).ravel()).reshape(e.d, e.d)


def riemannian_gradient(e, u: np.ndarray) -> np.ndarray:
    """Euclidean gradient ``2G`` projected onto the tangent space of the unitary group at ``u``."""
    g = env_gradient(e, u)
    return u @ (u.conj().T @ g - g.conj().T @ u)
