"""Tomography of perfect-square costs ``f(U) = |tr(E_L^dagger U)|**2``.

Write ``E_L = sum_m c_m sigma_m``.  Then ``f(sigma_m) = d**2 |c_m|**2`` gives
every amplitude, and the two-string unitaries ``T = (sigma_a + z sigma_j) / sqrt(2)``
(``z = +-1`` when the strings anticommute, ``+-i`` when they commute) give

    f(T) = d**2 / 2 * (|c_a|**2 + |c_j|**2 + 2 Re(z c_a conj(c_j))).

With the anchor ``c_a`` real positive this fixes one quadrature of ``c_j``;
the other follows from ``|c_j|`` up to a sign.  The signs are resolved by
extra cross links between non-anchor strings and an exhaustive search for
the sign pattern that best explains all measurements.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from qlt.circuit import Circuit, GateSlot, Hamiltonian
from qlt.environment import EnvironmentTensor
from qlt.pauli import all_paulis, pauli_commutes, pauli_matrices

MAX_AMBIGUOUS = 20


class PhaseChainError(ValueError):
    pass


def perfect_square_environment(e_l: np.ndarray) -> EnvironmentTensor:
    """Environment with ``E[i1,o1,i2,o2] = conj(E_L[o1,i1]) E_L[o2,i2]``."""
    v = np.asarray(e_l).ravel()
    return EnvironmentTensor(np.outer(v.conj(), v))


def linear_cost(e_l: np.ndarray, us: np.ndarray) -> np.ndarray:
    tr = np.einsum("ab,nab->n", np.asarray(e_l).conj(), np.asarray(us).reshape(-1, *np.shape(e_l)))
    return np.abs(tr) ** 2


def combination_gate(k: int, i: int, j: int, zeta: complex | None = None) -> tuple[np.ndarray, complex]:
    """``(sigma_i + zeta sigma_j) / sqrt(2)`` with the unitary choice of ``zeta``."""
    paulis = all_paulis(k)
    commute = pauli_commutes(paulis[i], paulis[j])
    if zeta is None:
        zeta = 1j if commute else 1.0
    if (abs(zeta.imag) > 1e-12) != commute:
        raise ValueError("zeta must be +-1 for anticommuting and +-i for commuting strings")
    s = pauli_matrices(k)
    return (s[i] + zeta * s[j]) / np.sqrt(2), zeta


@dataclass
class LinearSquareResult:
    e_l: np.ndarray
    residual: float
    coefficients: np.ndarray
    gates: np.ndarray
    values: np.ndarray


def _measurement_plan(k: int, amp: np.ndarray, tol: float):
    n = 4**k
    anchor = int(np.argmax(amp))
    others = [j for j in range(n) if j != anchor and amp[j] > tol]
    links = [(anchor, j) for j in range(n) if j != anchor]
    # cross links between consecutive and next-to-consecutive non-anchor strings
    cross = [(others[t], others[t + s]) for s in (1, 2) for t in range(len(others) - s)]
    return anchor, links, cross


def linear_square_estimate(k: int, f_eval, tol: float = 1e-9) -> LinearSquareResult:
    """Core estimator; ``f_eval(gates) -> costs`` supplies (possibly noisy) measurements."""
    n = 4**k
    d = 1 << k
    s = pauli_matrices(k)
    f_p = np.asarray(f_eval(s), dtype=float)
    amp = np.sqrt(np.clip(f_p, 0.0, None)) / d
    scale = amp.max(initial=0.0)
    if scale <= tol:
        raise PhaseChainError("all amplitudes vanish: the chain anchor has no weight")
    anchor, links, cross = _measurement_plan(k, amp, tol * max(1.0, scale))
    combos = [combination_gate(k, a, j) for a, j in links + cross]
    t_gates = np.stack([g for g, _ in combos])
    zetas = np.array([z for _, z in combos])
    f_t = np.asarray(f_eval(t_gates), dtype=float)

    # known quadrature from the anchor links: Re(z c_a conj(c_j)) with c_a = amp[anchor]
    c = np.zeros(n, dtype=np.complex128)
    c[anchor] = amp[anchor]
    known = np.zeros(n)
    unknown_mag = np.zeros(n)
    for t, (a, j) in enumerate(links):
        val = (2 * f_t[t] / d**2 - amp[a] ** 2 - amp[j] ** 2) / (2 * amp[a])
        val = float(np.clip(val, -amp[j], amp[j]))
        known[j] = val
        unknown_mag[j] = np.sqrt(max(amp[j] ** 2 - val**2, 0.0))

    def build(signs: np.ndarray) -> np.ndarray:
        # rows of candidate coefficient vectors, one per sign pattern
        out = np.tile(c, (len(signs), 1))
        for t, (_, j) in enumerate(links):
            z = zetas[t]
            # anticommuting (z=1): Re c_j known, Im c_j = -+ mag (Re(c_a conj c_j) = c_a Re c_j)
            # commuting (z=i): Re(i c_a conj c_j) = c_a Im c_j known
            quad = unknown_mag[j] * signs[:, ambiguous_pos[j]] if j in ambiguous_pos else 0.0
            if abs(z.imag) < 1e-12:
                out[:, j] = z.real * known[j] + 1j * quad
            else:
                out[:, j] = quad + 1j * z.imag * known[j]
        return out

    ambiguous = [j for _, j in links if unknown_mag[j] > tol * max(1.0, scale)]
    if len(ambiguous) > MAX_AMBIGUOUS:
        raise PhaseChainError(f"{len(ambiguous)} ambiguous signs exceed the search limit")
    ambiguous_pos = {j: p for p, j in enumerate(ambiguous)}
    patterns = np.array(list(itertools.product((1.0, -1.0), repeat=len(ambiguous))))
    if patterns.size == 0:
        patterns = np.ones((1, 0))
    all_gates = np.concatenate([s, t_gates])
    all_f = np.concatenate([f_p, f_t])
    # predicted f for every pattern: |tr(E_L^dagger G)|^2 = d^2 |sum_m conj(c_m) g_m|^2
    g_coeff = np.einsum("mab,gba->gm", s, all_gates) / d  # G = sum_m g_m sigma_m
    best, best_err = None, np.inf
    for start in range(0, len(patterns), 4096):
        cand = build(patterns[start : start + 4096])
        pred = d**2 * np.abs(cand.conj() @ g_coeff.T) ** 2
        err = np.sum((pred - all_f) ** 2, axis=1)
        i = int(np.argmin(err))
        if err[i] < best_err:
            best, best_err = cand[i], err[i]
    e_l = np.einsum("m,mab->ab", best, s)
    pred = linear_cost(e_l, all_gates)
    return LinearSquareResult(e_l, float(np.max(np.abs(pred - all_f))), best, all_gates, all_f)


def linear_square_tomography(
    c: Circuit,
    h: Hamiltonian,
    gate_index: int,
    shots_per_circuit: int | None,
    rng: np.random.Generator | None = None,
    slot: GateSlot | None = None,
) -> LinearSquareResult:
    """Perfect-square tomography of a gate slot (the caller asserts the cost is a perfect square).

    ``shots_per_circuit=None`` uses exact cost values.
    """
    slot = GateSlot(c, h, gate_index) if slot is None else slot
    rng = np.random.default_rng() if rng is None else rng

    def f_eval(gates):
        gates = np.asarray(gates)
        if shots_per_circuit is None:
            return slot.energies(gates)
        idx = np.repeat(np.arange(len(gates)), shots_per_circuit)
        return slot.sample(gates, idx, rng).reshape(len(gates), -1).mean(axis=1)

    return linear_square_estimate(slot.k, f_eval)
