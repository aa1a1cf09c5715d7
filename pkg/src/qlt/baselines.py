"""Parameterized two-qubit gates and the parameter-shift / SPSA baselines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qlt.circuit import Circuit, Gate, GateSlot, Hamiltonian, single_shot_sample
from qlt.optimizer import Trace

N_PARAMS = 15

_I2 = np.eye(2, dtype=np.complex128)
# CNOT with control on qubit 0 (left factor) and with control on qubit 1
_CX01 = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128)
_CX10 = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=np.complex128)
_SWAP = _CX10 @ _CX01 @ _CX10


def rz(t: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def ry(t: float) -> np.ndarray:
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def _zyz(a: float, b: float, c: float) -> np.ndarray:
    return rz(a) @ ry(b) @ rz(c)


def two_qubit_template(theta) -> np.ndarray:
    """Three-CNOT universal two-qubit gate with 15 rotation angles.

    Angles 0-5: ``Rz Ry Rz`` on qubit 0 then qubit 1, applied first.
    Angles 6, 7: ``Rz`` on qubit 0 and ``Ry`` on qubit 1 between the first two
    CNOTs.  Angle 8: ``Ry`` on qubit 1.  Angles 9-14: final ``Rz Ry Rz`` layer.
    Every rotation is ``exp(-i t P / 2)``, so the two-point shift rule with
    shift ``pi/2`` is exact for each angle.  The three CNOTs alone multiply to
    a SWAP, so a fixed wire crossing is applied first to make ``theta = 0``
    the identity.
    """
    t = np.asarray(theta, dtype=float)
    if t.shape != (N_PARAMS,):
        raise ValueError(f"expected {N_PARAMS} angles, got shape {t.shape}")
    first = np.kron(_zyz(t[0], t[1], t[2]), _zyz(t[3], t[4], t[5]))
    mid1 = np.kron(rz(t[6]), ry(t[7]))
    mid2 = np.kron(_I2, ry(t[8]))
    last = np.kron(_zyz(t[9], t[10], t[11]), _zyz(t[12], t[13], t[14]))
    return last @ _CX10 @ mid2 @ _CX01 @ mid1 @ _CX10 @ first @ _SWAP


def parameter_shift_gradient(f, theta) -> np.ndarray:
    """``df/dtheta_m = (f(theta + pi/2 e_m) - f(theta - pi/2 e_m)) / 2`` for a scalar ``f``."""
    theta = np.asarray(theta, dtype=float)
    grad = np.empty_like(theta)
    for m in range(theta.size):
        shift = np.zeros_like(theta)
        shift[m] = np.pi / 2
        grad[m] = (f(theta + shift) - f(theta - shift)) / 2
    return grad


def shifted_templates(theta) -> np.ndarray:
    """The 30 shifted gates ``(+m, -m)`` for every angle, shape ``(2 * 15, 4, 4)``."""
    out = []
    for m in range(N_PARAMS):
        for sign in (1, -1):
            t = np.array(theta, dtype=float)
            t[m] += sign * np.pi / 2
            out.append(two_qubit_template(t))
    return np.stack(out)


@dataclass
class TemplateCircuit:
    """A circuit whose gates are all :func:`two_qubit_template` instances."""

    n: int
    supports: tuple
    params: np.ndarray  # (G, 15)

    def circuit(self) -> Circuit:
        return Circuit(self.n, tuple(Gate(two_qubit_template(p), s) for p, s in zip(self.params, self.supports)))

    @classmethod
    def staircase(cls, n: int, layers: int, rng: np.random.Generator) -> "TemplateCircuit":
        supports = tuple((q, q + 1) for _ in range(layers) for q in range(n - 1))
        params = rng.uniform(0, 2 * np.pi, size=(len(supports), N_PARAMS))
        return cls(n, supports, params)


@dataclass
class GDConfig:
    learning_rate: float = 0.15
    shots_per_circuit: int | None = 100  # None: exact expectation values
    max_iters: int = 200
    max_total_shots: int | None = None


@dataclass
class SPSAConfig:
    shots_per_evaluation: int = 10_000
    a: float = 0.3
    c: float = 0.15
    big_a: float = 10.0
    alpha: float = 0.602
    gamma: float = 0.101
    max_iters: int = 1000
    max_total_shots: int | None = None


def _energy(c: Circuit, h: Hamiltonian) -> float:
    slot = GateSlot(c, h, 0)
    return float(slot.energies(slot.gate)[0])


def parameter_shift_gd(
    tc: TemplateCircuit, h: Hamiltonian, cfg: GDConfig, rng: np.random.Generator
) -> tuple[TemplateCircuit, Trace]:
    """Full-gradient descent; every shifted circuit is measured with ``shots_per_circuit`` shots."""
    params = np.array(tc.params, dtype=float)
    trace = Trace()
    trace.record(-1, 0, 0, _energy(TemplateCircuit(tc.n, tc.supports, params).circuit(), h))
    n_gates = len(tc.supports)
    for _ in range(cfg.max_iters):
        if cfg.max_total_shots is not None and trace.events[-1].cum_shots >= cfg.max_total_shots:
            break
        circ = TemplateCircuit(tc.n, tc.supports, params).circuit()
        grad = np.empty_like(params)
        for g in range(n_gates):
            slot = GateSlot(circ, h, g)
            gates = shifted_templates(params[g])
            if cfg.shots_per_circuit is None:
                f = slot.energies(gates)
            else:
                idx = np.repeat(np.arange(len(gates)), cfg.shots_per_circuit)
                f = slot.sample(gates, idx, rng).reshape(len(gates), -1).mean(axis=1)
            grad[g] = (f[0::2] - f[1::2]) / 2
        params = params - cfg.learning_rate * grad
        circuits = 2 * N_PARAMS * n_gates
        shots = 0 if cfg.shots_per_circuit is None else circuits * cfg.shots_per_circuit
        trace.record(-1, shots, circuits, _energy(TemplateCircuit(tc.n, tc.supports, params).circuit(), h))
    return TemplateCircuit(tc.n, tc.supports, params), trace


def spsa(
    tc: TemplateCircuit, h: Hamiltonian, cfg: SPSAConfig, rng: np.random.Generator
) -> tuple[TemplateCircuit, Trace]:
    """Simultaneous-perturbation stochastic approximation with the standard gain schedules."""
    params = np.array(tc.params, dtype=float)
    trace = Trace()
    trace.record(-1, 0, 0, _energy(TemplateCircuit(tc.n, tc.supports, params).circuit(), h))
    for it in range(1, cfg.max_iters + 1):
        if cfg.max_total_shots is not None and trace.events[-1].cum_shots >= cfg.max_total_shots:
            break
        a_k = cfg.a / (it + cfg.big_a) ** cfg.alpha
        c_k = cfg.c / it**cfg.gamma
        delta = rng.choice((-1.0, 1.0), size=params.shape)
        ys = []
        for sign in (1, -1):
            circ = TemplateCircuit(tc.n, tc.supports, params + sign * c_k * delta).circuit()
            ys.append(float(np.mean(single_shot_sample(circ, h, rng, shots=cfg.shots_per_evaluation))))
        ghat = (ys[0] - ys[1]) / (2 * c_k) * delta  # 1/delta == delta for +-1 entries
        params = params - a_k * ghat
        trace.record(-1, 2 * cfg.shots_per_evaluation, 2, _energy(TemplateCircuit(tc.n, tc.supports, params).circuit(), h))
    return TemplateCircuit(tc.n, tc.supports, params), trace


def run_baseline(method: str, tc: TemplateCircuit, h: Hamiltonian, cfg, rng: np.random.Generator):
    if method == "parameter_shift_gd":
        return parameter_shift_gd(tc, h, cfg or GDConfig(), rng)
    if method == "spsa":
        return spsa(tc, h, cfg or SPSAConfig(), rng)
    raise ValueError(f"unknown baseline {method!r}")
