import numpy as np
import pytest

from qlt.circuit import (
    Circuit,
    CircuitSizeError,
    Gate,
    GateSlot,
    Hamiltonian,
    exact_energy,
    exact_ground_energy,
    run_circuit,
    single_shot_sample,
    staircase_ansatz,
    substitute_gate,
)

H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def test_empty_circuit_state():
    psi = run_circuit(Circuit(2))
    assert np.allclose(psi, [1, 0, 0, 0])


def test_hadamard_state():
    assert np.allclose(run_circuit(Circuit(1, [(H, (0,))])), np.array([1, 1]) / np.sqrt(2))


def test_ghz_state():
    c = Circuit(3, [(H, (0,)), (CNOT, (0, 1)), (CNOT, (1, 2))])
    expected = np.zeros(8)
    expected[[0, 7]] = 1 / np.sqrt(2)
    assert np.allclose(run_circuit(c), expected)


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate(np.eye(2), (0, 1))
    with pytest.raises(ValueError):
        Gate(np.eye(4), (1, 1))
    with pytest.raises(ValueError):
        Circuit(2, [(np.eye(4), (1, 2))])
    with pytest.raises(CircuitSizeError):
        run_circuit(Circuit(15))


def test_ising_energies(oracle):
    h = Hamiltonian.ising(2, 1.0, 0.5)
    assert exact_energy(Circuit(2), h) == pytest.approx(1.0)
    plus = Circuit(2, [(H, (0,)), (H, (1,))])
    assert exact_energy(plus, h) == pytest.approx(-1.0)
    assert exact_ground_energy(h) == pytest.approx(oracle["ising_ground"]["2"], abs=1e-12)
    assert exact_ground_energy(h) == pytest.approx(-np.sqrt(2), abs=1e-12)


@pytest.mark.parametrize("n", [4, 6, 8])
def test_ground_energies_match_oracle(oracle, n):
    assert exact_ground_energy(Hamiltonian.ising(n)) == pytest.approx(oracle["ising_ground"][str(n)], abs=1e-10)


def test_variational_bound(rng):
    h = Hamiltonian.ising(5)
    c = staircase_ansatz(5, 2, rng)
    assert exact_energy(c, h) >= exact_ground_energy(h) - 1e-12


def test_single_qubit_ground():
    h = Hamiltonian(1, ((-1.0, "X"),))
    assert exact_ground_energy(h) == pytest.approx(-1.0)


def test_sparse_ground_matches_dense():
    h = Hamiltonian.ising(11)
    dense = float(np.linalg.eigvalsh(h.matrix(sparse=True).toarray())[0])
    assert exact_ground_energy(h) == pytest.approx(dense, abs=1e-8)


def test_hamiltonian_groups_and_json(tmp_path):
    h = Hamiltonian.ising(4)
    assert len(h.groups) == 2
    assert h.basis(0) == "ZZZZ" and h.basis(1) == "XXXX"
    path = tmp_path / "h.json"
    h.save(path)
    h2 = Hamiltonian.load(path)
    assert np.allclose(h2.matrix(), h.matrix())
    with pytest.raises(ValueError):
        Hamiltonian(2, ((1.0, "XI"), (1.0, "ZI")), groups=((0, 1),))
    with pytest.raises(ValueError):
        h.with_probabilities((0.3, 0.3))


def test_sampling_deterministic_cases():
    rng = np.random.default_rng(0)
    zz = Hamiltonian(2, ((1.0, "ZZ"),))
    assert np.all(single_shot_sample(Circuit(2), zz, rng, shots=100) == 1.0)
    x0 = Hamiltonian(1, ((1.0, "X"),))
    assert np.all(single_shot_sample(Circuit(1, [(H, (0,))]), x0, rng, shots=100) == 1.0)


def test_sampling_unbiased():
    rng = np.random.default_rng(1)
    c = staircase_ansatz(4, 1, rng)
    h = Hamiltonian.ising(4)
    s = single_shot_sample(c, h, rng, shots=100_000)
    assert abs(s.mean() - exact_energy(c, h)) < 3 * s.std() / np.sqrt(len(s))


def test_sampling_with_nonuniform_probabilities():
    rng = np.random.default_rng(2)
    c = staircase_ansatz(3, 1, rng)
    h = Hamiltonian.ising(3).with_probabilities((0.8, 0.2))
    s = single_shot_sample(c, h, rng, shots=200_000)
    assert abs(s.mean() - exact_energy(c, h)) < 4 * s.std() / np.sqrt(len(s))


def test_substitute_gate(rng):
    c = staircase_ansatz(4, 2, rng)
    h = Hamiltonian.ising(4)
    assert len(c) == 6
    assert substitute_gate(c, 2, c.gates[2].matrix) == c
    u = staircase_ansatz(2, 1, rng).gates[0].matrix
    once = substitute_gate(c, 2, u)
    assert substitute_gate(once, 2, u) == once
    ident = substitute_gate(c, 0, np.eye(4))
    assert exact_energy(substitute_gate(ident, 0, np.eye(4)), h) == pytest.approx(exact_energy(ident, h))
    with pytest.raises(IndexError):
        substitute_gate(c, 6, u)


def test_staircase_shape(rng):
    assert len(staircase_ansatz(2, 1, rng)) == 1
    c = staircase_ansatz(4, 2, rng)
    assert [g.support for g in c.gates] == [(0, 1), (1, 2), (2, 3)] * 2
    for g in c.gates:
        assert np.allclose(g.matrix.conj().T @ g.matrix, np.eye(4), atol=1e-10)


def test_gate_slot_energies_match_full_simulation(rng):
    c = staircase_ansatz(5, 2, rng)
    h = Hamiltonian.ising(5)
    slot = GateSlot(c, h, 3)
    us = staircase_ansatz(2, 5, rng)
    for g in us.gates:
        e = slot.energies(g.matrix)[0]
        assert e == pytest.approx(exact_energy(substitute_gate(c, 3, g.matrix), h), abs=1e-12)


def test_gate_slot_sample_unbiased(rng):
    c = staircase_ansatz(4, 1, rng)
    h = Hamiltonian.ising(4)
    slot = GateSlot(c, h, 1)
    gates = np.stack([g.matrix for g in staircase_ansatz(2, 3, rng).gates])
    vals = slot.sample(gates, np.repeat(np.arange(3), 50_000), rng).reshape(3, -1)
    exact = slot.energies(gates)
    assert np.all(np.abs(vals.mean(axis=1) - exact) < 4 * vals.std(axis=1) / np.sqrt(50_000))
