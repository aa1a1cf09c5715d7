"""Hot inner loops of the statevector simulator and the shot sampler.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy
version with identical semantics.  The numba path is used when numba is
importable and ``QLT_DISABLE_NUMBA`` is unset (or ``0``); set
``QLT_DISABLE_NUMBA=1`` to force the numpy path.  Both implementations stay
importable as ``numpy_kernels`` / ``numba_kernels`` so tests and the
benchmark can compare them directly.

Bit convention: qubit ``q`` of an ``n``-qubit register is bit ``n - 1 - q``
of the basis-state index, matching ``np.kron`` ordering.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

try:  # pragma: no cover - exercised implicitly
    import numba
except ImportError:  # pragma: no cover
    numba = None

_I_POW = np.array([1, 1j, -1, -1j], dtype=np.complex128)


def _env_disabled() -> bool:
    return os.environ.get("QLT_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")


# ---------------------------------------------------------------- numpy path


def _np_apply_gate(states, gate, qubits, n):
    """Apply ``gate`` on ``qubits`` to every row of ``states`` (shape (B, 2**n))."""
    m = len(qubits)
    batch = states.shape[0]
    psi = states.reshape((batch,) + (2,) * n)
    g = np.asarray(gate).reshape((2,) * (2 * m))
    axes = [q + 1 for q in qubits]
    out = np.tensordot(psi, g, axes=(axes, list(range(m, 2 * m))))
    # tensordot puts the gate output axes last; move them back into place
    out = np.moveaxis(out, list(range(out.ndim - m, out.ndim)), axes)
    return np.ascontiguousarray(out.reshape(batch, -1))


def _np_parity(values, mask):
    return (np.bitwise_count(values & np.uint64(mask)) & 1).astype(np.int64)


def _np_pauli_apply(states, x, z, phase, n):
    dim = 1 << n
    b = np.arange(dim, dtype=np.uint64)
    ny = int(bin(x & z).count("1"))
    coef = _I_POW[(phase + ny) % 4] * (1 - 2 * _np_parity(b, z))
    out = np.empty_like(states)
    out[:, b ^ np.uint64(x)] = states * coef
    return out


def _np_term_values(n, masks, weights):
    dim = 1 << n
    b = np.arange(dim, dtype=np.uint64)
    vals = np.zeros(dim)
    for mask, w in zip(masks, weights):
        vals += w * (1 - 2 * _np_parity(b, int(mask)))
    return vals


def _np_sample_rows(cdf, rows, uniforms):
    n_rows, width = cdf.shape
    flat = (cdf + np.arange(n_rows)[:, None]).ravel()
    idx = np.searchsorted(flat, rows + uniforms, side="right") - rows * width
    return np.minimum(idx, width - 1).astype(np.int64)


numpy_kernels = SimpleNamespace(
    apply_gate=_np_apply_gate,
    pauli_apply=_np_pauli_apply,
    term_values=_np_term_values,
    sample_rows=_np_sample_rows,
    name="numpy",
)


# ---------------------------------------------------------------- numba path

numba_kernels = None

if numba is not None:  # pragma: no branch

    @numba.njit(cache=True)
    def _nb_apply_gate_core(states, gate, shifts, n):
        batch, dim = states.shape
        m = shifts.shape[0]
        sub = 1 << m
        offsets = np.zeros(sub, dtype=np.int64)
        support = 0
        for r in range(sub):
            off = 0
            for a in range(m):
                if (r >> (m - 1 - a)) & 1:
                    off |= 1 << shifts[a]
            offsets[r] = off
        for a in range(m):
            support |= 1 << shifts[a]
        out = np.empty_like(states)
        buf = np.empty(sub, dtype=np.complex128)
        for bi in range(batch):
            for base in range(dim):
                if base & support:
                    continue
                for c in range(sub):
                    buf[c] = states[bi, base | offsets[c]]
                for r in range(sub):
                    acc = 0j
                    for c in range(sub):
                        acc += gate[r, c] * buf[c]
                    out[bi, base | offsets[r]] = acc
        return out

    def _nb_apply_gate(states, gate, qubits, n):
        shifts = np.array([n - 1 - q for q in qubits], dtype=np.int64)
        return _nb_apply_gate_core(
            np.ascontiguousarray(states, dtype=np.complex128),
            np.ascontiguousarray(gate, dtype=np.complex128),
            shifts,
            n,
        )

    @numba.njit(cache=True)
    def _nb_popparity(v):
        p = 0
        while v:
            v &= v - 1
            p ^= 1
        return p

    @numba.njit(cache=True)
    def _nb_pauli_apply_core(states, x, z, base_coef):
        batch, dim = states.shape
        out = np.empty_like(states)
        for b in range(dim):
            c = base_coef
            if _nb_popparity(z & b):
                c = -c
            t = b ^ x
            for bi in range(batch):
                out[bi, t] = c * states[bi, b]
        return out

    def _nb_pauli_apply(states, x, z, phase, n):
        ny = bin(x & z).count("1")
        return _nb_pauli_apply_core(
            np.ascontiguousarray(states, dtype=np.complex128),
            np.int64(x),
            np.int64(z),
            complex(_I_POW[(phase + ny) % 4]),
        )

    @numba.njit(cache=True)
    def _nb_term_values_core(dim, masks, weights):
        vals = np.zeros(dim)
        for b in range(dim):
            acc = 0.0
            for t in range(masks.shape[0]):
                if _nb_popparity(masks[t] & b):
                    acc -= weights[t]
                else:
                    acc += weights[t]
            vals[b] = acc
        return vals

    def _nb_term_values(n, masks, weights):
        return _nb_term_values_core(
            1 << n,
            np.asarray(masks, dtype=np.int64),
            np.asarray(weights, dtype=np.float64),
        )

    @numba.njit(cache=True)
    def _nb_sample_rows_core(cdf, rows, uniforms):
        width = cdf.shape[1]
        out = np.empty(rows.shape[0], dtype=np.int64)
        for s in range(rows.shape[0]):
            r = rows[s]
            u = uniforms[s]
            lo = 0
            hi = width
            while lo < hi:
                mid = (lo + hi) >> 1
                if cdf[r, mid] > u:
                    hi = mid
                else:
                    lo = mid + 1
            out[s] = min(lo, width - 1)
        return out

    def _nb_sample_rows(cdf, rows, uniforms):
        return _nb_sample_rows_core(
            np.ascontiguousarray(cdf, dtype=np.float64),
            np.asarray(rows, dtype=np.int64),
            np.asarray(uniforms, dtype=np.float64),
        )

    numba_kernels = SimpleNamespace(
        apply_gate=_nb_apply_gate,
        pauli_apply=_nb_pauli_apply,
        term_values=_nb_term_values,
        sample_rows=_nb_sample_rows,
        name="numba",
    )


def active_kernels() -> SimpleNamespace:
    """Kernel namespace selected by the ``QLT_DISABLE_NUMBA`` flag."""
    if numba_kernels is None or _env_disabled():
        return numpy_kernels
    return numba_kernels


def apply_gate(states, gate, qubits, n):
    return active_kernels().apply_gate(states, gate, tuple(qubits), n)


def pauli_apply(states, x, z, phase, n):
    return active_kernels().pauli_apply(states, int(x), int(z), int(phase), n)


def term_values(n, masks, weights):
    return active_kernels().term_values(n, masks, weights)


def sample_rows(cdf, rows, uniforms):
    return active_kernels().sample_rows(cdf, rows, uniforms)
