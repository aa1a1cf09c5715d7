"""Independent reference values for the test suite.

Nothing from ``qlt`` is imported here.  Every value is computed from dense
matrices with plain numpy/scipy and written to ``derived.json`` next to
this file.  The tests only read the frozen JSON, so a regression in the
package cannot silently move its own reference values.

    python tests/oracles/build_oracles.py
"""

from __future__ import annotations

import itertools
import json
from functools import reduce
from pathlib import Path

import numpy as np
from scipy.stats import unitary_group

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.diag([1, 1j])
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def kron(*ops):
    return reduce(np.kron, ops)


def ising_dense(n, jz=1.0, hx=0.5):
    h = np.zeros((2**n, 2**n), dtype=complex)
    for q in range(n - 1):
        ops = [I2] * n
        ops[q] = ops[q + 1] = Z
        h += jz * kron(*ops)
    for q in range(n):
        ops = [I2] * n
        ops[q] = X
        h -= hx * kron(*ops)
    return h


def ground(n):
    return float(np.linalg.eigvalsh(ising_dense(n))[0])


def cost_row(u):
    """Real features of f(U) = sum E[a,b] conj(u_a) u_b for Hermitian E (row of a linear map)."""
    v = u.ravel()
    outer = np.outer(v.conj(), v)
    iu = np.triu_indices(len(v))
    return np.concatenate([outer[iu].real, outer[iu].imag])


def numeric_rank(gates):
    m = np.array([cost_row(g) for g in gates])
    s = np.linalg.svd(m, compute_uv=False)
    return int(np.sum(s > 1e-8 * s[0]))


def random_local(rng):
    return np.kron(unitary_group.rvs(2, random_state=rng), unitary_group.rvs(2, random_state=rng))


def cnot_limited_rank(t, rng, count=2000):
    gates = []
    for _ in range(count):
        u = random_local(rng)
        for _ in range(t):
            u = random_local(rng) @ CNOT @ u
        gates.append(u)
    return numeric_rank(gates)


def conjugation_images(u, labels):
    out = {}
    for lab in labels:
        p = kron(*[PAULI[c] for c in lab])
        img = u @ p @ u.conj().T
        for cand in itertools.product("IXYZ", repeat=len(lab)):
            q = kron(*[PAULI[c] for c in cand])
            ov = np.trace(q.conj().T @ img) / len(q)
            if abs(abs(ov) - 1) < 1e-9:
                out[lab] = ("+" if ov.real > 0 else "-") + "".join(cand)
    return out


def single_qubit_clifford_actions():
    def key(u):
        imgs = conjugation_images(u, ["X", "Z"])
        return (imgs["X"], imgs["Z"])

    seen, frontier = {key(I2): I2}, [I2]
    while frontier:
        nxt = []
        for u in frontier:
            for g in (H, S):
                w = g @ u
                kk = key(w)
                if kk not in seen:
                    seen[kk] = w
                    nxt.append(w)
        frontier = nxt
    return len(seen)


def main():
    rng = np.random.default_rng(20240101)
    data = {
        "ising_ground": {str(n): ground(n) for n in (2, 4, 6, 8)},
        "relevant_rank": {"1": numeric_rank([unitary_group.rvs(2, random_state=rng) for _ in range(200)]),
                          "2": numeric_rank([unitary_group.rvs(4, random_state=rng) for _ in range(2000)])},
        "relevant_formula_k3": 1 + (4**3 - 1) ** 2,
        "cnot_limited_rank_k2": {str(t): cnot_limited_rank(t, rng) for t in (0, 1, 2)},
        "cnot_images": conjugation_images(CNOT, ["ZI", "XI", "IZ", "IX"]),
        "cnot_zz_image": conjugation_images(CNOT.conj().T, ["ZZ"])["ZZ"],
        "single_qubit_clifford_actions": single_qubit_clifford_actions(),
        "frame_potential_paulis_1q": float(np.mean([abs(np.trace(a.conj().T @ b)) ** 4
                                                      for a in PAULI.values() for b in PAULI.values()])),
    }
    path = Path(__file__).with_name("derived.json")
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    print(json.dumps(data, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
