import numpy as np
import pytest

from qlt.circuit import Circuit, GateSlot, Hamiltonian, exact_energy, exact_ground_energy, staircase_ansatz
from qlt.clifford import haar_random_unitaries, haar_random_unitary
from qlt.environment import EnvironmentTensor, contract, contract_many, exact_environment
from qlt.optimizer import (
    GateOptConfig,
    SweepConfig,
    Trace,
    optimal_gate,
    polar_minimizer,
    sweep_optimize,
    sweep_order,
    tangent_gradient_norm,
)


def lin(l, u):
    return float(np.real(np.vdot(l, u)))


def test_polar_minimizer_examples(rng):
    u, val, deg = polar_minimizer(np.eye(2), full_output=True)
    assert np.allclose(u, -np.eye(2)) and val == pytest.approx(-2) and not deg
    assert lin(np.diag([3.0, 0.0]), polar_minimizer(np.diag([3.0, 0.0]))) == pytest.approx(-3, abs=1e-10)
    l = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    best = lin(l, polar_minimizer(l))
    assert all(best <= lin(l, v) + 1e-12 for v in haar_random_unitaries(4, 100, rng))
    u, _, deg = polar_minimizer(np.zeros((2, 2)), full_output=True)
    assert deg and np.allclose(u, np.eye(2))


def test_constant_environment():
    _, cost = optimal_gate(EnvironmentTensor.identity(2), GateOptConfig(restarts=2, seed=0))
    assert cost == pytest.approx(4, abs=1e-9)


def test_single_qubit_flip():
    c = Circuit(1, [(np.eye(2), (0,))])
    e = exact_environment(c, Hamiltonian(1, ((1.0, "Z"),)), 0)
    u, cost = optimal_gate(e, GateOptConfig(seed=1))
    assert cost == pytest.approx(-1, abs=1e-9)
    assert abs(u[1, 0]) == pytest.approx(1, abs=1e-6)


@pytest.mark.parametrize("method", ["alternating_polar", "riemannian_gd"])
def test_beats_monte_carlo(method):
    rng = np.random.default_rng(11)
    e = EnvironmentTensor.random_hermitian(2, rng)
    u, cost = optimal_gate(e, GateOptConfig(method=method, restarts=20), rng=rng)
    mc = contract_many(e, haar_random_unitaries(4, 10_000, rng)).min()
    assert cost <= mc
    assert cost == pytest.approx(contract(e, u))
    assert tangent_gradient_norm(e, u) < 1e-5 * e.norm()


def test_methods_agree():
    rng = np.random.default_rng(5)
    e = EnvironmentTensor.random_hermitian(2, rng)
    _, a = optimal_gate(e, GateOptConfig("alternating_polar", restarts=20), rng=rng)
    _, b = optimal_gate(e, GateOptConfig("riemannian_gd", restarts=20), rng=rng)
    assert a == pytest.approx(b, abs=1e-6)


def test_invariant_under_start_phase():
    rng = np.random.default_rng(9)
    e = EnvironmentTensor.random_hermitian(2, rng)
    start = haar_random_unitary(4, rng)
    _, a = optimal_gate(e, GateOptConfig(restarts=8), start=start, rng=np.random.default_rng(0))
    _, b = optimal_gate(e, GateOptConfig(restarts=8), start=np.exp(0.7j) * start, rng=np.random.default_rng(0))
    assert a == pytest.approx(b, abs=1e-9)


def test_rejects_non_hermitian(rng):
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    with pytest.raises(ValueError):
        optimal_gate(EnvironmentTensor(m))


def test_config_validation():
    with pytest.raises(ValueError):
        GateOptConfig(method="newton")
    with pytest.raises(ValueError):
        SweepConfig(estimator="magic")


def test_sweep_order():
    assert sweep_order(3, 0, "forward_backward") == [0, 1, 2]
    assert sweep_order(3, 1, "forward_backward") == [2, 1, 0]
    assert sweep_order(3, 1, "forward") == [0, 1, 2]


def test_exact_sweep_monotone():
    rng = np.random.default_rng(3)
    c = staircase_ansatz(6, 2, rng)
    h = Hamiltonian.ising(6)
    out, trace = sweep_optimize(c, h, SweepConfig(max_sweeps=3), GateOptConfig(restarts=4), "exact", rng)
    e = trace.energies
    assert np.all(np.diff(e) <= 1e-9)
    assert e[-1] == pytest.approx(exact_energy(out, h))
    assert e[-1] >= exact_ground_energy(h) - 1e-9


def test_single_gate_circuit_reaches_optimum():
    rng = np.random.default_rng(2)
    c = staircase_ansatz(2, 1, rng)
    h = Hamiltonian.ising(2)
    out, trace = sweep_optimize(c, h, SweepConfig(max_sweeps=1), GateOptConfig(restarts=4), "exact", rng)
    assert trace.energies[-1] == pytest.approx(exact_ground_energy(h), abs=1e-9)
    out, trace = sweep_optimize(
        c, h, SweepConfig(shots_per_gate=2_000_000, max_sweeps=1), GateOptConfig(restarts=4), "sampled", rng
    )
    assert trace.energies[-1] == pytest.approx(exact_ground_energy(h), abs=2e-2)
    assert trace.shots[-1] > 0 and trace.circuits[-1] == 272


def test_sampled_sweep_close_to_exact():
    rng = np.random.default_rng(8)
    c = staircase_ansatz(4, 1, rng)
    h = Hamiltonian.ising(4)
    _, exact = sweep_optimize(c, h, SweepConfig(max_sweeps=2), GateOptConfig(restarts=4), "exact", np.random.default_rng(0))
    cfg = SweepConfig(shots_per_gate=10_000_000, max_sweeps=2)
    _, sampled = sweep_optimize(c, h, cfg, GateOptConfig(restarts=4), "sampled", np.random.default_rng(0))
    assert abs(sampled.energies[-1] - exact.energies[-1]) <= 5e-2 * abs(exact.energies[-1])


def test_shot_budget_stops_sweep():
    rng = np.random.default_rng(0)
    c = staircase_ansatz(4, 1, rng)
    cfg = SweepConfig(shots_per_gate=27_200, max_total_shots=27_200)
    _, trace = sweep_optimize(c, Hamiltonian.ising(4), cfg, GateOptConfig(restarts=1), "sampled", rng)
    assert len(trace.events) == 2


def test_trace_helpers():
    t = Trace()
    t.record(-1, 0, 0, 1.0)
    t.record(0, 10, 2, 0.5)
    t.record(1, 10, 2, -1.0)
    assert list(t.shots) == [0, 10, 20] and list(t.circuits) == [0, 2, 4]
    assert t.first_reaching(0.6).event == 1
    assert t.first_reaching(-2) is None
    assert t.rows()[2] == (2, 1, 20, 4, -1.0)
