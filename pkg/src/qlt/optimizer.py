"""Single-gate minimization on the unitary group and the gate-by-gate sweep.

``f(U) = u^H A u`` with ``u = U.ravel()`` and ``A = Emat^T``.  Two solvers:

* ``alternating_polar``: linearize around the current gate and jump to the
  exact minimizer of the linear form (a polar decomposition).  The form is
  built from the spectrally shifted matrix ``A - lambda_max I``, which is
  negative semidefinite, so each step minimizes a majorizer of ``f`` and
  the cost never increases.
* ``riemannian_gd``: gradient steps in the tangent space with a polar
  retraction and Armijo backtracking.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from qlt.circuit import Circuit, GateSlot, Hamiltonian, substitute_gate
from qlt.clifford import haar_random_unitary
from qlt.environment import EnvironmentTensor, env_gradient, riemannian_gradient

log = logging.getLogger(__name__)

METHODS = ("alternating_polar", "riemannian_gd")


def polar_factor(a: np.ndarray) -> np.ndarray:
    w, _, vh = np.linalg.svd(a)
    return w @ vh


def polar_minimizer(l: np.ndarray, full_output: bool = False):
    """Unitary minimizing ``Re tr(L^dagger U)``: ``U = -W V^dagger`` for ``L = W S V^dagger``.

    The minimum is ``-sum(S)``.  A zero matrix gives the identity and
    ``degenerate=True`` in the full output ``(U, value, degenerate)``.
    """
    l = np.asarray(l, dtype=np.complex128)
    w, s, vh = np.linalg.svd(l)
    degenerate = bool(s[0] == 0.0)
    u = np.eye(l.shape[0], dtype=np.complex128) if degenerate else -(w @ vh)
    if full_output:
        return u, float(np.real(np.vdot(l, u))), degenerate
    return u


@dataclass
class GateOptConfig:
    method: str = "alternating_polar"
    restarts: int = 8
    max_iters: int = 2000
    tol: float = 1e-13
    grad_tol: float = 1e-9
    seed: int | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


def _cost(a: np.ndarray, u: np.ndarray) -> float:
    v = u.ravel()
    return float(np.real(v.conj() @ a @ v))


def _alternating_polar(e: EnvironmentTensor, u: np.ndarray, cfg: GateOptConfig) -> np.ndarray:
    a = e.matrix.T
    shift = float(np.linalg.eigvalsh(e.matrix)[-1])
    scale = max(e.norm(), 1e-300)
    cost = _cost(a, u)
    for _ in range(cfg.max_iters):
        g = env_gradient(e, u) - shift * u
        new = polar_minimizer(g)
        new_cost = _cost(a, new)
        if new_cost > cost:  # only rounding can do this
            break
        done = cost - new_cost <= cfg.tol * scale
        u, cost = new, new_cost
        if done or np.linalg.norm(riemannian_gradient(e, u)) <= cfg.grad_tol * scale:
            break
    return u


def _riemannian_gd(e: EnvironmentTensor, u: np.ndarray, cfg: GateOptConfig) -> np.ndarray:
    a = e.matrix.T
    scale = max(e.norm(), 1e-300)
    step = 1.0 / scale
    cost = _cost(a, u)
    for _ in range(cfg.max_iters):
        grad = riemannian_gradient(e, u)
        gn2 = float(np.real(np.vdot(grad, grad)))
        if np.sqrt(gn2) <= cfg.grad_tol * scale:
            break
        t = step
        while True:
            cand = polar_factor(u - t * grad)
            c_cost = _cost(a, cand)
            if c_cost <= cost - 1e-4 * t * gn2 or t < 1e-12 / scale:
                break
            t /= 2
        if c_cost > cost:
            break
        improved = cost - c_cost
        u, cost = cand, c_cost
        step = min(2 * t, 10.0 / scale)
        if improved <= cfg.tol * scale:
            break
    return u


def optimal_gate(
    e: EnvironmentTensor,
    cfg: GateOptConfig | None = None,
    start: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, float]:
    """Best unitary found over ``cfg.restarts`` Haar-random starts (plus ``start`` if given)."""
    cfg = GateOptConfig() if cfg is None else cfg
    if e.hermiticity_error() > 1e-8 * max(1.0, e.norm()):
        raise ValueError("environment is not Hermitian")
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    solver = _alternating_polar if cfg.method == "alternating_polar" else _riemannian_gd
    starts = [haar_random_unitary(e.d, rng) for _ in range(cfg.restarts)]
    if start is not None:
        starts.insert(0, np.asarray(start, dtype=np.complex128))
    a = e.matrix.T
    best_u, best_cost = None, np.inf
    for u0 in starts:
        u = solver(e, u0, cfg)
        c = _cost(a, u)
        if c < best_cost:
            best_u, best_cost = u, c
    return best_u, best_cost


# ------------------------------------------------------------------ sweeps


@dataclass
class TraceEvent:
    event: int
    gate_index: int
    cum_shots: int
    cum_circuits: int
    energy: float


@dataclass
class Trace:
    events: list = field(default_factory=list)
    note: str = ""

    def record(self, gate_index: int, shots: int, circuits: int, energy: float) -> None:
        last_s, last_c = (self.events[-1].cum_shots, self.events[-1].cum_circuits) if self.events else (0, 0)
        self.events.append(TraceEvent(len(self.events), gate_index, last_s + shots, last_c + circuits, energy))

    @property
    def energies(self) -> np.ndarray:
        return np.array([ev.energy for ev in self.events])

    @property
    def shots(self) -> np.ndarray:
        return np.array([ev.cum_shots for ev in self.events])

    @property
    def circuits(self) -> np.ndarray:
        return np.array([ev.cum_circuits for ev in self.events])

    def first_reaching(self, threshold: float) -> TraceEvent | None:
        for ev in self.events:
            if ev.energy <= threshold:
                return ev
        return None

    def rows(self) -> list:
        return [(ev.event, ev.gate_index, ev.cum_shots, ev.cum_circuits, ev.energy) for ev in self.events]

    HEADER = ("event", "gate_index", "cum_shots", "cum_circuits", "energy")


ESTIMATORS = ("tableaux", "uniform_regression", "uniform_shadow")
ORDERS = ("forward", "forward_backward")


@dataclass
class SweepConfig:
    estimator: str = "tableaux"
    shots_per_gate: int = 50_000
    order: str = "forward_backward"
    max_sweeps: int = 10
    max_total_shots: int | None = None
    stall_tol: float = 1e-6

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")
        if self.order not in ORDERS:
            raise ValueError(f"order must be one of {ORDERS}")
        if self.shots_per_gate < 1 or self.max_sweeps < 1:
            raise ValueError("budgets must be positive")


def sweep_order(n_gates: int, sweep: int, order: str) -> list:
    fwd = list(range(n_gates))
    return fwd[::-1] if order == "forward_backward" and sweep % 2 else fwd


def _estimate_environment(slot: GateSlot, cfg: SweepConfig, rng: np.random.Generator):
    """Tomography of one slot; returns (environment, shots, unique circuits)."""
    from qlt.tomography.tableaux import builtin_cover_1q, builtin_cover_2q, tableaux_tomography
    from qlt.tomography.uniform import uniform_tomography

    if cfg.estimator == "tableaux":
        cover = builtin_cover_2q() if slot.k == 2 else builtin_cover_1q()
        per = max(1, cfg.shots_per_gate // cover.n_gates)
        rec = tableaux_tomography(slot.circuit, slot.hamiltonian, slot.index, cover, per, rng, slot=slot)
        return rec.estimate, rec.shots_used, rec.gates_used
    est = "regression" if cfg.estimator == "uniform_regression" else "closed_form_shadow"
    rec = uniform_tomography(
        slot.circuit, slot.hamiltonian, slot.index, cfg.shots_per_gate, "clifford_group", est, rng, slot=slot
    )
    return rec.estimate, rec.shots_used, rec.gates_used


def sweep_optimize(
    c: Circuit,
    h: Hamiltonian,
    sweep: SweepConfig | None = None,
    gate_cfg: GateOptConfig | None = None,
    mode: str = "exact",
    rng: np.random.Generator | None = None,
    callback: Callable | None = None,
) -> tuple[Circuit, Trace]:
    """Gate-by-gate optimization; ``mode='exact'`` uses exact environments.

    Every replacement is logged with the exact energy of the new circuit.
    The loop stops after ``max_sweeps``, when the shot budget is exhausted,
    or when a full sweep lowers the (exact or estimated) energy by less than
    ``stall_tol``.
    """
    if mode not in ("exact", "sampled"):
        raise ValueError("mode must be 'exact' or 'sampled'")
    sweep = SweepConfig() if sweep is None else sweep
    gate_cfg = GateOptConfig() if gate_cfg is None else gate_cfg
    rng = np.random.default_rng(gate_cfg.seed) if rng is None else rng
    if any(g.k > 2 for g in c.gates):
        raise ValueError("sweeps support gates with k <= 2")
    trace = Trace()
    first = GateSlot(c, h, 0)
    energy = float(first.energies(first.gate)[0])
    trace.record(-1, 0, 0, energy)
    for s in range(sweep.max_sweeps):
        start_energy = energy
        start_estimate = None
        est_energy = None
        for gi in sweep_order(len(c.gates), s, sweep.order):
            if sweep.max_total_shots is not None and trace.events[-1].cum_shots >= sweep.max_total_shots:
                return c, trace
            slot = GateSlot(c, h, gi)
            if mode == "exact":
                env, shots, circuits = EnvironmentTensor(slot.environment_matrix()), 0, 0
            else:
                env, shots, circuits = _estimate_environment(slot, sweep, rng)
                env = EnvironmentTensor((env.matrix + env.matrix.conj().T) / 2)
            current = slot.gate
            u, est_energy = optimal_gate(env, gate_cfg, start=current, rng=rng)
            if start_estimate is None:
                start_estimate = _cost(env.matrix.T, current)
            c = substitute_gate(c, gi, u)
            energy = float(slot.energies(u)[0])
            trace.record(gi, shots, circuits, energy)
            if callback is not None:
                callback(c, trace)
        gain = (start_energy - energy) if mode == "exact" else (start_estimate - est_energy)
        log.debug("sweep %d: energy %.8f (gain %.3g)", s, energy, gain)
        if gain < sweep.stall_tol:
            trace.note = f"stalled after sweep {s + 1}"
            break
    return c, trace


def tangent_gradient_norm(e: EnvironmentTensor, u: np.ndarray) -> float:
    return float(np.linalg.norm(riemannian_gradient(e, u)))
