"""Clifford tableaux, their unitaries, and random / exhaustive generation."""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np

from qlt.pauli import (
    DimensionError,
    PauliString,
    all_paulis,
    pauli_compose,
    pauli_to_matrix,
)

SINGLE_QUBIT_GATES = ("H", "S", "SDG", "X", "Y", "Z")
_ALIASES = {"SDAG": "SDG", "S†": "SDG", "SD": "SDG", "CX": "CNOT"}
_TOKEN_RE = re.compile(r"^(CNOT|CX|SDG|SDAG|SD|S†|H|S|X|Y|Z)(\d+)$", re.IGNORECASE)


class UnknownGateError(ValueError):
    pass


def _conj_gate(p: PauliString, name: str, qubits: Sequence[int]) -> PauliString:
    """``g p g^dagger`` for one generator gate, by local bit updates."""
    k = p.k
    x, z, ph = p.x, p.z, p.phase
    if name == "CNOT":
        c, t = qubits
        bc, bt = 1 << (k - 1 - c), 1 << (k - 1 - t)
        xc, zc = bool(x & bc), bool(z & bc)
        xt, zt = bool(x & bt), bool(z & bt)
        if xc and zt and not (xt ^ zc):
            ph += 2
        if xc:
            x ^= bt
        if zt:
            z ^= bc
        return PauliString(k, x, z, ph)
    (q,) = qubits
    b = 1 << (k - 1 - q)
    xq, zq = bool(x & b), bool(z & b)
    if name == "H":
        if xq and zq:
            ph += 2
        x = (x & ~b) | (b if zq else 0)
        z = (z & ~b) | (b if xq else 0)
    elif name == "S":
        if xq:
            if zq:
                ph += 2
            z ^= b
    elif name == "SDG":
        if xq:
            if not zq:
                ph += 2
            z ^= b
    elif name == "X":
        if zq:
            ph += 2
    elif name == "Y":
        if xq ^ zq:
            ph += 2
    elif name == "Z":
        if xq:
            ph += 2
    else:
        raise UnknownGateError(name)
    return PauliString(k, x, z, ph)


def parse_gate(token) -> tuple:
    """Normalize ``"H0"``, ``"CX01"``, ``("CNOT", 0, 1)`` ... to ``(name, *qubits)``."""
    if isinstance(token, str):
        m = _TOKEN_RE.match(token.strip())
        if m is None:
            raise UnknownGateError(f"bad gate token {token!r}")
        name, digits = m.group(1).upper(), m.group(2)
        name = _ALIASES.get(name, name)
        if name == "CNOT":
            if len(digits) != 2:
                raise UnknownGateError(f"CNOT token needs two qubit digits: {token!r}")
            return ("CNOT", int(digits[0]), int(digits[1]))
        return (name, int(digits))
    name, *qubits = token
    name = _ALIASES.get(str(name).upper(), str(name).upper())
    if name == "CNOT":
        if len(qubits) != 2 or qubits[0] == qubits[1]:
            raise UnknownGateError(f"CNOT needs two distinct qubits, got {qubits}")
    elif name in SINGLE_QUBIT_GATES:
        if len(qubits) != 1:
            raise UnknownGateError(f"{name} acts on one qubit, got {qubits}")
    else:
        raise UnknownGateError(f"unknown gate {name!r}")
    return (name, *[int(q) for q in qubits])


def parse_circuit(text_or_gates) -> list[tuple]:
    if isinstance(text_or_gates, str):
        return [parse_gate(tok) for tok in text_or_gates.split()]
    return [parse_gate(g) for g in text_or_gates]


def format_circuit(gates: Iterable[tuple]) -> str:
    out = []
    for name, *qs in gates:
        out.append(("CX" if name == "CNOT" else name) + "".join(str(q) for q in qs))
    return " ".join(out)


@dataclass(frozen=True)
class CliffordTableau:
    """Images of ``X_0..X_{k-1}, Z_0..Z_{k-1}`` under ``P -> U P U^dagger``."""

    k: int
    images: tuple

    def __post_init__(self):
        if len(self.images) != 2 * self.k:
            raise ValueError("a tableau needs 2k generator images")
        for img in self.images:
            if img.k != self.k or not img.is_hermitian:
                raise ValueError("generator images must be Hermitian strings on k qubits")

    @classmethod
    def identity(cls, k: int) -> "CliffordTableau":
        xs = tuple(PauliString(k, 1 << (k - 1 - q), 0) for q in range(k))
        zs = tuple(PauliString(k, 0, 1 << (k - 1 - q)) for q in range(k))
        return cls(k, xs + zs)

    def x_image(self, q: int) -> PauliString:
        return self.images[q]

    def z_image(self, q: int) -> PauliString:
        return self.images[self.k + q]

    def apply(self, name: str, *qubits: int) -> "CliffordTableau":
        """Tableau of ``g U`` where ``g`` is one generator gate."""
        for q in qubits:
            if not 0 <= q < self.k:
                raise IndexError(f"qubit {q} out of range for k={self.k}")
        return CliffordTableau(self.k, tuple(_conj_gate(p, name, qubits) for p in self.images))

    def conjugate(self, p: PauliString) -> PauliString:
        return tableau_conjugate(self, p)

    def __matmul__(self, other: "CliffordTableau") -> "CliffordTableau":
        """Operator product: ``(A @ B)`` conjugates by ``U_A U_B``."""
        if other.k != self.k:
            raise DimensionError("tableaux on different qubit counts")
        return CliffordTableau(self.k, tuple(self.conjugate(p) for p in other.images))

    def then(self, other: "CliffordTableau") -> "CliffordTableau":
        """Apply ``self`` first, then ``other``."""
        return other @ self

    def symplectic_matrix(self) -> np.ndarray:
        """2k x 2k GF(2) matrix; column c is the (x|z) vector of generator image c."""
        k = self.k
        cols = [np.concatenate([p.x_bits, p.z_bits]) for p in self.images]
        return np.array(cols, dtype=np.uint8).T.reshape(2 * k, 2 * k)

    def is_symplectic(self) -> bool:
        k = self.k
        s = self.symplectic_matrix().astype(np.int64)
        omega = np.zeros((2 * k, 2 * k), dtype=np.int64)
        omega[:k, k:] = np.eye(k, dtype=np.int64)
        omega[k:, :k] = np.eye(k, dtype=np.int64)
        return bool(np.array_equal((s.T @ omega @ s) % 2, omega))

    @cached_property
    def pauli_action(self) -> tuple[np.ndarray, np.ndarray]:
        """``(target, sign)`` with ``U sigma_j U^dagger = sign[j] * sigma_{target[j]}``."""
        paulis = all_paulis(self.k)
        target = np.empty(len(paulis), dtype=np.int64)
        sign = np.empty(len(paulis), dtype=np.int64)
        for j, p in enumerate(paulis):
            img = self.conjugate(p)
            target[j] = img.index
            sign[j] = img.sign
        return target, sign

    def unitary(self) -> np.ndarray:
        return tableau_to_unitary(self)

    def __str__(self) -> str:
        k = self.k
        rows = [f"X{q}->{self.images[q]}" for q in range(k)]
        rows += [f"Z{q}->{self.images[k + q]}" for q in range(k)]
        return ", ".join(rows)


def tableau_from_circuit(k: int, gates) -> CliffordTableau:
    """Tableau of a gate sequence; the first gate acts first on states."""
    tab = CliffordTableau.identity(k)
    for name, *qubits in parse_circuit(gates):
        for q in qubits:
            if not 0 <= q < k:
                raise IndexError(f"qubit {q} out of range for k={k}")
        tab = tab.apply(name, *qubits)
    return tab


def tableau_conjugate(t: CliffordTableau, p: PauliString) -> PauliString:
    """``U p U^dagger`` as a signed Pauli string."""
    if p.k != t.k:
        raise DimensionError(f"tableau on {t.k} qubits, string on {p.k}")
    k = t.k
    # p = i**(phase + |x&z|) * prod_q X_q^{x_q} * prod_q Z_q^{z_q}
    out = PauliString(k, 0, 0, p.phase + bin(p.x & p.z).count("1"))
    for q in range(k):
        if (p.x >> (k - 1 - q)) & 1:
            out = pauli_compose(out, t.images[q])
    for q in range(k):
        if (p.z >> (k - 1 - q)) & 1:
            out = pauli_compose(out, t.images[k + q])
    return out


def fix_global_phase(u: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Rotate the global phase so the first nonzero entry of column 0 is real positive."""
    col = u[:, 0]
    idx = int(np.argmax(np.abs(col) > tol))
    ph = col[idx] / abs(col[idx])
    return u / ph


def tableau_to_unitary(t: CliffordTableau) -> np.ndarray:
    """A unitary realizing the tableau, global phase fixed by :func:`fix_global_phase`."""
    k = t.k
    if k > 6:
        raise ValueError("dense Clifford unitaries are limited to k <= 6")
    d = 1 << k
    proj = np.eye(d, dtype=np.complex128)
    for q in range(k):
        proj = proj @ (np.eye(d) + pauli_to_matrix(t.z_image(q))) / 2
    col = int(np.argmax(np.linalg.norm(proj, axis=0)))
    psi0 = proj[:, col] / np.linalg.norm(proj[:, col])
    xmats = [pauli_to_matrix(t.x_image(q)) for q in range(k)]
    u = np.empty((d, d), dtype=np.complex128)
    for b in range(d):
        v = psi0
        for q in range(k):
            if (b >> (k - 1 - q)) & 1:
                v = xmats[q] @ v
        u[:, b] = v
    return fix_global_phase(u)


def random_clifford(k: int, rng: np.random.Generator) -> CliffordTableau:
    """Random Clifford element.

    For ``k <= 2`` the draw is exactly uniform over the enumerated group.
    Larger ``k`` uses a random generator word of length ``20 k**2`` or one
    more (a fixed length would only reach words of one parity) followed by
    a random Pauli layer.  Every element then has nonzero probability, but
    the distribution is not exactly uniform.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k <= 2:
        group = _clifford_group(k)
        return group[int(rng.integers(len(group)))]
    tab = CliffordTableau.identity(k)
    for _ in range(20 * k * k + int(rng.integers(2))):
        kind = rng.integers(3)
        if kind == 2:
            c, t = rng.choice(k, size=2, replace=False)
            tab = tab.apply("CNOT", int(c), int(t))
        else:
            tab = tab.apply("H" if kind == 0 else "S", int(rng.integers(k)))
    for q in range(k):
        for name in ("X", "Z"):
            if rng.integers(2):
                tab = tab.apply(name, q)
    return tab


def _generators(k: int) -> list[tuple]:
    gens = [("H", q) for q in range(k)] + [("S", q) for q in range(k)]
    gens += [("CNOT", c, t) for c in range(k) for t in range(k) if c != t]
    return gens


@lru_cache(maxsize=None)
def _clifford_group(k: int) -> tuple:
    start = CliffordTableau.identity(k)
    seen = {start.images: start}
    queue = deque([start])
    gens = _generators(k)
    while queue:
        tab = queue.popleft()
        for name, *qs in gens:
            nxt = tab.apply(name, *qs)
            if nxt.images not in seen:
                seen[nxt.images] = nxt
                queue.append(nxt)
    return tuple(seen.values())


def enumerate_clifford_group(k: int) -> list[CliffordTableau]:
    """One tableau per Clifford element modulo global phase (24 for k=1, 11520 for k=2)."""
    if k not in (1, 2):
        raise ValueError("Clifford group enumeration is supported for k in {1, 2} only")
    return list(_clifford_group(k))


@lru_cache(maxsize=None)
def _clifford_unitaries(k: int) -> np.ndarray:
    out = np.stack([tableau_to_unitary(t) for t in _clifford_group(k)])
    out.setflags(write=False)
    return out


def clifford_group_unitaries(k: int) -> np.ndarray:
    """Unitaries of :func:`enumerate_clifford_group`, same order, read-only."""
    if k not in (1, 2):
        raise ValueError("Clifford group enumeration is supported for k in {1, 2} only")
    return _clifford_unitaries(k)


def haar_random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed ``d x d`` unitary (QR of a Ginibre matrix, phase-corrected)."""
    if d < 2:
        raise ValueError("d must be >= 2")
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def haar_random_unitaries(d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Batch version of :func:`haar_random_unitary`, shape ``(count, d, d)``."""
    z = (rng.standard_normal((count, d, d)) + 1j * rng.standard_normal((count, d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=1, axis2=2)
    return q * (diag / np.abs(diag))[:, None, :]
