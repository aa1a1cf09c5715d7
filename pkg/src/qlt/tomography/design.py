"""Gate sets, environment bases, design matrices and least-squares regression."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from qlt.clifford import clifford_group_unitaries, haar_random_unitaries
from qlt.environment import EnvironmentTensor, count_relevant, measurable_projection
from qlt.pauli import pauli_matrices

PINV_RTOL = 1e-10
MODES = ("cycle", "uniform")


class CoverageWarning(UserWarning):
    """The gate set does not span the measurable subspace."""


@dataclass(frozen=True, eq=False)
class GateSet:
    """``N`` gates on ``k`` qubits plus how shots pick among them.

    ``mode='cycle'`` visits the gates in order, ``mode='uniform'`` draws a
    uniformly random gate for every shot.  ``labels`` is free-form metadata
    (e.g. cover group per gate), ``cnot_counts`` is optional.
    """

    k: int
    gates: np.ndarray
    mode: str = "cycle"
    labels: tuple | None = None
    cnot_counts: tuple | None = None

    def __post_init__(self):
        g = np.array(self.gates, dtype=np.complex128)
        d = 1 << self.k
        if g.ndim != 3 or g.shape[1:] != (d, d):
            raise ValueError(f"gates of shape {g.shape} do not act on k={self.k} qubits")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        eye = np.eye(d)
        err = np.linalg.norm(np.einsum("nba,nbc->nac", g.conj(), g) - eye, axis=(1, 2))
        if err.size and err.max() > 1e-10:
            raise ValueError(f"gate {int(err.argmax())} is not unitary")
        g.setflags(write=False)
        object.__setattr__(self, "gates", g)

    def __len__(self) -> int:
        return self.gates.shape[0]

    @property
    def d(self) -> int:
        return 1 << self.k

    def with_mode(self, mode: str) -> "GateSet":
        return GateSet(self.k, self.gates, mode, self.labels, self.cnot_counts)

    def subset(self, idx) -> "GateSet":
        idx = np.asarray(idx)
        labels = None if self.labels is None else tuple(self.labels[i] for i in idx)
        cnots = None if self.cnot_counts is None else tuple(self.cnot_counts[i] for i in idx)
        return GateSet(self.k, self.gates[idx], self.mode, labels, cnots)

    @classmethod
    def clifford_group(cls, k: int, mode: str = "cycle") -> "GateSet":
        return cls(k, clifford_group_unitaries(k), mode)

    @classmethod
    def haar(cls, k: int, count: int, rng: np.random.Generator, mode: str = "cycle") -> "GateSet":
        return cls(k, haar_random_unitaries(1 << k, count, rng), mode)

    @classmethod
    def paulis(cls, k: int, mode: str = "cycle") -> "GateSet":
        return cls(k, pauli_matrices(k), mode)

    @classmethod
    def random_clifford_subset(cls, k: int, count: int, rng: np.random.Generator) -> "GateSet":
        """``count`` elements of the Clifford group drawn uniformly with replacement."""
        group = clifford_group_unitaries(k)
        return cls(k, group[rng.integers(len(group), size=count)])


class Basis:
    """Orthonormal basis of the ``d**2 x d**2`` environment matrices.

    ``elements[b]`` is the matrix form (see :mod:`qlt.environment`) of basis
    tensor ``b``; element 0 is the normalized constant ``Id / d``.
    """

    def __init__(self, k: int, elements: np.ndarray, kind: str = "general", check: bool = True):
        self.k = k
        self.d = 1 << k
        self.kind = kind
        self.elements = np.asarray(elements, dtype=np.complex128)
        d2 = self.d * self.d
        if self.elements.shape[1:] != (d2, d2):
            raise ValueError("basis elements have the wrong shape")
        if check:
            flat = self.elements.reshape(len(self.elements), -1)
            gram = flat.conj() @ flat.T
            if np.max(np.abs(gram - np.eye(len(flat)))) > 1e-10:
                raise ValueError("basis is not orthonormal")

    def __len__(self) -> int:
        return len(self.elements)

    @classmethod
    def horizontal(cls, k: int) -> "Basis":
        """Normalized Pauli pairs ``B^{ij} / d``, ``(i, j)`` flattened row-major."""
        return cls(k, _horizontal_elements(k), kind="horizontal", check=False)

    @classmethod
    def rotated(cls, k: int, rng: np.random.Generator) -> "Basis":
        """Horizontal basis mixed by a random real orthogonal matrix (still Hermitian)."""
        h = _horizontal_elements(k)
        q, _ = np.linalg.qr(rng.normal(size=(len(h), len(h))))
        return cls(k, np.einsum("ab,bxy->axy", q.T, h, optimize=True), kind="general")

    def coordinates(self, e: EnvironmentTensor) -> np.ndarray:
        flat = self.elements.reshape(len(self), -1)
        return (flat.conj() @ e.matrix.ravel()).real

    def tensor(self, v: np.ndarray) -> EnvironmentTensor:
        return EnvironmentTensor(np.tensordot(v, self.elements, axes=1))


@lru_cache(maxsize=None)
def _horizontal_elements(k: int) -> np.ndarray:
    s = pauli_matrices(k)
    d = 1 << k
    # Emat of B^{ij} is kron(sigma_i^T, sigma_j)
    out = np.einsum("iab,jcd->ijacbd", s.transpose(0, 2, 1), s).reshape(4**k * 4**k, d * d, d * d) / d
    out.setflags(write=False)
    return out


def design_rows(gates: np.ndarray, basis: Basis) -> np.ndarray:
    """Rows ``M[u, b] = contract(B_b, U_u, U_u^dagger)``."""
    gates = np.asarray(gates)
    if basis.kind == "horizontal":
        # (1/d) tr(sigma_i U sigma_j U^dagger): the Pauli transfer matrix of U
        s = pauli_matrices(basis.k)
        conj = np.einsum("nab,jbc,ndc->njad", gates, s, gates.conj(), optimize=True)
        ptm = np.einsum("iba,njab->nij", s, conj, optimize=True).real / basis.d
        return ptm.reshape(len(gates), -1)
    flat = gates.reshape(len(gates), -1)
    return np.einsum("na,bac,nc->nb", flat, basis.elements, flat.conj(), optimize=True).real


@dataclass
class DesignMatrix:
    gate_set: GateSet
    basis: Basis
    rows: np.ndarray

    @property
    def shape(self):
        return self.rows.shape


def build_design_matrix(gs: GateSet, basis: Basis | None = None) -> DesignMatrix:
    basis = Basis.horizontal(gs.k) if basis is None else basis
    if basis.k != gs.k:
        raise ValueError("basis and gate set act on different qubit counts")
    rows = np.concatenate([design_rows(gs.gates[i : i + 2048], basis) for i in range(0, len(gs), 2048)])
    return DesignMatrix(gs, basis, rows)


def _pinv_psd(a: np.ndarray, rtol: float = PINV_RTOL) -> tuple[np.ndarray, np.ndarray]:
    """Pseudo-inverse of a symmetric PSD matrix and its kept eigenvalues."""
    w, v = np.linalg.eigh((a + a.T) / 2)
    keep = w > rtol * max(w.max(initial=0.0), 0.0)
    if not keep.any():
        return np.zeros_like(a), w[:0]
    vk = v[:, keep]
    return (vk / w[keep]) @ vk.T, w[keep]


@dataclass
class DesignDiagnostics:
    second_moment: np.ndarray
    n_rows: float
    trace_inv_pseudo: float
    frame_bounds: tuple
    rank: int
    coverage_complete: bool

    @property
    def normalized_second_moment(self) -> np.ndarray:
        return self.second_moment / self.n_rows

    def predicted_variance(self, sigma2: float, n_shots: float) -> float:
        return self.trace_inv_pseudo * sigma2 / n_shots


def _diagnostics_from_moment(a: np.ndarray, n_rows: float, k: int) -> DesignDiagnostics:
    inv, kept = _pinv_psd(a / n_rows)
    rank = len(kept)
    return DesignDiagnostics(
        second_moment=a,
        n_rows=n_rows,
        trace_inv_pseudo=float(np.trace(inv)),
        frame_bounds=(float(kept.min() * n_rows), float(kept.max() * n_rows)) if rank else (0.0, 0.0),
        rank=rank,
        coverage_complete=rank >= count_relevant(k),
    )


def design_diagnostics(m: DesignMatrix, weights: np.ndarray | None = None) -> DesignDiagnostics:
    """Second moment ``M^T M`` and the derived variance and frame figures.

    ``weights`` (shots per row) turn the moment into ``M^T W M`` normalized
    by the total weight.
    """
    rows = m.rows
    if weights is None:
        return _diagnostics_from_moment(rows.T @ rows, float(len(rows)), m.basis.k)
    w = np.asarray(weights, dtype=float)
    return _diagnostics_from_moment((rows * w[:, None]).T @ rows, float(w.sum()), m.basis.k)


def frame_potential(gs: GateSet, chunk: int = 1024) -> float:
    """``(1/N**2) sum_ij |tr(U_i^dagger U_j)|**4``."""
    flat = gs.gates.reshape(len(gs), -1)
    total = 0.0
    for i in range(0, len(flat), chunk):
        tr = flat[i : i + chunk].conj() @ flat.T
        total += float(np.sum(np.abs(tr) ** 4))
    return total / len(flat) ** 2


# ------------------------------------------------------------------ regression


@dataclass
class Reconstruction:
    estimate: EnvironmentTensor
    shots_used: int
    gates_used: int
    diagnostics: dict = field(default_factory=dict)


class NormalEquations:
    """Streaming accumulator of ``M^T W M`` and ``M^T phi`` for weighted least squares."""

    def __init__(self, basis: Basis):
        self.basis = basis
        nb = len(basis)
        self.ata = np.zeros((nb, nb))
        self.atb = np.zeros(nb)
        self.sum_sq = 0.0
        self.shots = 0
        self.gates = 0

    def add(self, rows: np.ndarray, counts: np.ndarray, sums: np.ndarray, sum_sq: float = 0.0) -> None:
        """Add rows with ``counts[u]`` shots whose values total ``sums[u]``."""
        counts = np.asarray(counts, dtype=float)
        self.ata += (rows * counts[:, None]).T @ rows
        self.atb += rows.T @ np.asarray(sums, dtype=float)
        self.sum_sq += float(sum_sq)
        self.shots += int(counts.sum())
        self.gates += int(np.count_nonzero(counts))

    def solve(self) -> Reconstruction:
        basis = self.basis
        if self.shots == 0:
            return Reconstruction(EnvironmentTensor.zeros(basis.k), 0, 0, {"coverage_complete": False})
        diag = _diagnostics_from_moment(self.ata, float(self.shots), basis.k)
        inv, _ = _pinv_psd(self.ata)
        v = inv @ self.atb
        estimate = measurable_projection(basis.tensor(v))
        # pooled single-shot variance around the fitted cost values
        resid = self.sum_sq - 2 * v @ self.atb + v @ self.ata @ v
        sigma2 = max(resid, 0.0) / max(self.shots - diag.rank, 1)
        info = {
            "trace_inv_pseudo": diag.trace_inv_pseudo,
            "rank": diag.rank,
            "coverage_complete": diag.coverage_complete,
            "frame_bounds": diag.frame_bounds,
            "condition": diag.frame_bounds[1] / diag.frame_bounds[0] if diag.rank else np.inf,
            "single_shot_variance": sigma2,
            "predicted_variance": diag.predicted_variance(sigma2, self.shots),
        }
        if not diag.coverage_complete:
            info["warning"] = f"design spans {diag.rank} of {count_relevant(basis.k)} relevant directions"
            warnings.warn(info["warning"], CoverageWarning, stacklevel=3)
        return Reconstruction(estimate, self.shots, self.gates, info)


def aggregate(gate_index: np.ndarray, values: np.ndarray, n_gates: int):
    """Per-gate shot counts, value sums and the total sum of squares."""
    gate_index = np.asarray(gate_index, dtype=np.int64)
    values = np.asarray(values, dtype=float)
    counts = np.bincount(gate_index, minlength=n_gates)
    sums = np.bincount(gate_index, weights=values, minlength=n_gates)
    return counts, sums, float(values @ values)


def regress(m: DesignMatrix, samples, per_shot: bool = False) -> Reconstruction:
    """Least-squares estimate ``v = (M^T M)^+ M^T phi`` from a :class:`ShotBatch`.

    By default repeated gates are aggregated into one weighted row; with
    ``per_shot=True`` every shot gets its own row (identical result, slower).
    """
    neq = NormalEquations(m.basis)
    idx = np.asarray(samples.gate_index, dtype=np.int64)
    vals = np.asarray(samples.values, dtype=float)
    if idx.size and (idx.min() < 0 or idx.max() >= len(m.rows)):
        raise IndexError("sample references a gate outside the design matrix")
    if per_shot:
        neq.add(m.rows[idx], np.ones(len(idx)), vals, float(vals @ vals))
        neq.gates = int(np.unique(idx).size)
    else:
        counts, sums, sq = aggregate(idx, vals, len(m.rows))
        used = counts > 0
        neq.add(m.rows[used], counts[used], sums[used], sq)
    return neq.solve()


def reconstruction_error(estimate: EnvironmentTensor, truth: EnvironmentTensor) -> float:
    """Frobenius distance between two environments after the measurable projection."""
    return (measurable_projection(estimate) - measurable_projection(truth)).norm()


__all__ = [
    "Basis",
    "CoverageWarning",
    "DesignDiagnostics",
    "DesignMatrix",
    "GateSet",
    "NormalEquations",
    "Reconstruction",
    "aggregate",
    "build_design_matrix",
    "design_diagnostics",
    "design_rows",
    "frame_potential",
    "reconstruction_error",
    "regress",
]
