"""Landscape tomography for variational quantum circuits.

The cost of a circuit, seen as a function of a single gate with every other
gate frozen, is a quadratic form in that gate.  Its coefficient tensor (the
environment) can be estimated from measured costs of a designed gate set and
then minimized exactly, which gives a gate-by-gate circuit optimizer.
"""

__version__ = "0.1.0"

from qlt.circuit import Circuit, Gate, GateSlot, Hamiltonian, exact_energy, exact_ground_energy
from qlt.environment import EnvironmentTensor, contract, exact_environment
from qlt.optimizer import GateOptConfig, SweepConfig, optimal_gate, sweep_optimize

__all__ = [
    "__version__",
    "Circuit",
    "Gate",
    "GateSlot",
    "Hamiltonian",
    "exact_energy",
    "exact_ground_energy",
    "EnvironmentTensor",
    "contract",
    "exact_environment",
    "GateOptConfig",
    "SweepConfig",
    "optimal_gate",
    "sweep_optimize",
]
