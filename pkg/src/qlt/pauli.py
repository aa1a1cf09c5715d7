"""Pauli strings in symplectic form with exact phase tracking.

A string on ``k`` qubits is stored as two ``k``-bit integers (x and z bits)
plus a phase exponent ``p`` meaning a prefactor ``i**p``.  The operator is

    i**p * sigma(x_0, z_0) (x) ... (x) sigma(x_{k-1}, z_{k-1})

with sigma(0,0)=I, sigma(1,0)=X, sigma(1,1)=Y, sigma(0,1)=Z.  Qubit ``q`` is
bit ``k - 1 - q`` of the masks, so qubit 0 is the leftmost tensor factor.

Horizontal-basis index of a phase-free string: base-4 digits, one per
qubit with qubit 0 most significant, digit I=0, X=1, Y=2, Z=3.  Index 0 is
the identity string.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from qlt import _kernels

_LETTER = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_BITS = {v: k for k, v in _LETTER.items()}
_DIGIT = {"I": 0, "X": 1, "Y": 2, "Z": 3}
_DIGIT_BITS = [(0, 0), (1, 0), (1, 1), (0, 1)]
_PHASE_TEXT = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_PAULI_RE = re.compile(r"^\s*([+-]?)(i?)([IXYZ]+)\s*$")


class DimensionError(ValueError):
    """Operands act on different numbers of qubits."""


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    """``i**phase`` times a tensor product of single-qubit Paulis."""

    k: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        full = (1 << self.k) - 1
        if self.x & ~full or self.z & ~full:
            raise ValueError("bit masks exceed k qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def identity(cls, k: int) -> "PauliString":
        return cls(k)

    @classmethod
    def from_str(cls, text: str) -> "PauliString":
        """Parse ``"±iXYZI..."``; the sign and ``i`` prefix are optional."""
        m = _PAULI_RE.match(text)
        if m is None:
            raise ValueError(f"not a Pauli string: {text!r}")
        sign, imag, letters = m.groups()
        phase = (2 if sign == "-" else 0) + (1 if imag else 0)
        k = len(letters)
        x = z = 0
        for q, ch in enumerate(letters):
            bx, bz = _BITS[ch]
            x |= bx << (k - 1 - q)
            z |= bz << (k - 1 - q)
        return cls(k, x, z, phase)

    @classmethod
    def from_index(cls, index: int, k: int) -> "PauliString":
        x = z = 0
        for q in range(k):
            digit = (index >> (2 * (k - 1 - q))) & 3
            bx, bz = _DIGIT_BITS[digit]
            x |= bx << (k - 1 - q)
            z |= bz << (k - 1 - q)
        return cls(k, x, z)

    @property
    def x_bits(self) -> np.ndarray:
        return np.array([(self.x >> (self.k - 1 - q)) & 1 for q in range(self.k)], dtype=np.uint8)

    @property
    def z_bits(self) -> np.ndarray:
        return np.array([(self.z >> (self.k - 1 - q)) & 1 for q in range(self.k)], dtype=np.uint8)

    @property
    def letters(self) -> str:
        return "".join(
            _LETTER[((self.x >> (self.k - 1 - q)) & 1, (self.z >> (self.k - 1 - q)) & 1)]
            for q in range(self.k)
        )

    @property
    def index(self) -> int:
        """Horizontal-basis index of the phase-free string."""
        out = 0
        for ch in self.letters:
            out = 4 * out + _DIGIT[ch]
        return out

    @property
    def sign(self) -> int:
        if self.phase % 2:
            raise ValueError("string has an imaginary phase")
        return 1 - self.phase

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    def unsigned(self) -> "PauliString":
        return PauliString(self.k, self.x, self.z, 0)

    def weight(self) -> int:
        return _popcount(self.x | self.z)

    def __str__(self) -> str:
        return _PHASE_TEXT[self.phase] + self.letters

    def __mul__(self, other: "PauliString") -> "PauliString":
        return pauli_compose(self, other)

    def matrix(self) -> np.ndarray:
        return pauli_to_matrix(self)


def _check_k(p: PauliString, q: PauliString) -> None:
    if p.k != q.k:
        raise DimensionError(f"Pauli strings on {p.k} and {q.k} qubits")


def pauli_compose(p: PauliString, q: PauliString) -> PauliString:
    """Operator product ``p @ q`` with the phase tracked exactly."""
    _check_k(p, q)
    # sigma(x, z) = i**|x&z| X^x Z^z, and Z^z1 X^x2 = (-1)**|z1&x2| X^x2 Z^z1
    exp = (
        p.phase
        + q.phase
        + _popcount(p.x & p.z)
        + _popcount(q.x & q.z)
        + 2 * _popcount(p.z & q.x)
    )
    x = p.x ^ q.x
    z = p.z ^ q.z
    return PauliString(p.k, x, z, exp - _popcount(x & z))


def pauli_commutes(p: PauliString, q: PauliString) -> bool:
    """True iff ``p q = q p`` (symplectic inner product is zero)."""
    _check_k(p, q)
    return (_popcount(p.x & q.z) + _popcount(p.z & q.x)) % 2 == 0


def pauli_to_matrix(p: PauliString) -> np.ndarray:
    """Dense ``2**k x 2**k`` matrix of the string, including its phase."""
    if p.k > 12:
        raise ValueError("dense Pauli matrices are limited to k <= 12")
    d = 1 << p.k
    return _kernels.pauli_apply(np.eye(d, dtype=np.complex128), p.x, p.z, p.phase, p.k).T.copy()


def all_paulis(k: int) -> list[PauliString]:
    """The ``4**k`` phase-free strings in horizontal-index order."""
    return [PauliString.from_index(i, k) for i in range(4**k)]


@lru_cache(maxsize=None)
def _pauli_stack(k: int) -> np.ndarray:
    out = np.stack([pauli_to_matrix(p) for p in all_paulis(k)])
    out.setflags(write=False)
    return out


def pauli_matrices(k: int) -> np.ndarray:
    """Read-only array of shape ``(4**k, d, d)`` in horizontal-index order."""
    return _pauli_stack(k)


def pauli_coefficients(a: np.ndarray) -> np.ndarray:
    """Coefficients ``c`` with ``a = sum_m c_m sigma_m`` (``c_m = tr(sigma_m a) / d``)."""
    a = np.asarray(a)
    d = a.shape[-1]
    k = d.bit_length() - 1
    sig = pauli_matrices(k)
    return np.einsum("mab,...ba->...m", sig, a) / d
