"""Benchmark drivers shared by the CLI and the acceptance suite.

Each ``run_*`` function takes a validated config model and returns a
:class:`Table` (column names plus rows) or several of them.  Nothing here
writes files; see :mod:`qlt.cli` for persistence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from qlt.baselines import GDConfig, SPSAConfig, TemplateCircuit, parameter_shift_gd, spsa
from qlt.circuit import Circuit, GateSlot, Hamiltonian, exact_ground_energy, staircase_ansatz
from qlt.clifford import haar_random_unitaries
from qlt.environment import (
    EnvironmentTensor,
    contract,
    contract_many,
    count_relevant,
    horizontal_decompose,
    horizontal_reconstruct,
    measurable_mask,
    measurable_projection,
)
from qlt.optimizer import GateOptConfig, SweepConfig, Trace, optimal_gate, sweep_optimize
from qlt.tomography.design import GateSet, build_design_matrix, design_diagnostics
from qlt.tomography.tableaux import builtin_cover_1q, builtin_cover_2q, greedy_cover_search, tableaux_tomography
from qlt.tomography.uniform import uniform_tomography

TWO_DESIGN_TIP = {1: 1 + 3**3, 2: 1 + 15**3}


# ------------------------------------------------------------------ configs


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CircuitSpec(_Model):
    n: int = Field(6, ge=2, le=12)
    layers: int = Field(3, ge=1)
    jz: float = 1.0
    hx: float = 0.5
    gate_index: Optional[int] = Field(None, ge=0)


class EnvCheckConfig(_Model):
    circuit: CircuitSpec = CircuitSpec()
    n_random: int = Field(20, ge=1)
    seed: int = 0


Estimator = Literal["uniform_regression", "uniform_shadow", "uniform_haar", "tableaux"]


class TomoBenchConfig(_Model):
    circuit: CircuitSpec = CircuitSpec()
    shots: List[int] = [10_000, 100_000, 1_000_000]
    estimators: List[Estimator] = ["uniform_regression", "tableaux"]
    repeats: int = Field(3, ge=1)
    n_check: int = Field(200, ge=1)
    seed: int = 0

    @field_validator("shots")
    @classmethod
    def _positive(cls, v):
        if not v or min(v) < 1:
            raise ValueError("shot counts must be positive")
        return v


class OptGateBenchConfig(_Model):
    circuit: CircuitSpec = CircuitSpec()
    shots: List[int] = [10_000, 100_000, 1_000_000]
    estimator: Estimator = "tableaux"
    repeats: int = Field(8, ge=1)
    restarts: int = Field(8, ge=1)
    seed: int = 0

    _positive = field_validator("shots")(TomoBenchConfig._positive.__func__)


GateSource = Literal["haar", "clifford_random", "clifford_group", "builtin_cover"]


class GatesetOverheadConfig(_Model):
    k: Literal[1, 2] = 2
    sizes: List[int] = [272, 544, 1088, 2720, 5440, 11520]
    sources: List[GateSource] = ["haar", "clifford_random", "clifford_group", "builtin_cover"]
    repeats: int = Field(3, ge=1)
    seed: int = 0


class CoverSearchConfig(_Model):
    k: Literal[1, 2] = 2
    pool_size: int = Field(2000, ge=1)
    restarts: int = Field(100, ge=1)
    seed: int = 0


class SweepSpec(_Model):
    estimator: Literal["tableaux", "uniform_regression", "uniform_shadow"] = "tableaux"
    shots_per_gate: int = Field(50_000, ge=1)
    order: Literal["forward", "forward_backward"] = "forward_backward"
    max_sweeps: int = Field(6, ge=1)
    stall_tol: float = 1e-6
    restarts: int = Field(4, ge=1)


class GDSpec(_Model):
    learning_rate: float = 0.15
    shots_per_circuit: int = Field(100, ge=1)
    max_iters: int = Field(150, ge=0)


class SPSASpec(_Model):
    shots_per_evaluation: int = Field(10_000, ge=1)
    a: float = 0.3
    c: float = 0.15
    big_a: float = 10.0
    max_iters: int = Field(1500, ge=0)


Method = Literal["sweep", "parameter_shift_gd", "spsa"]


class VQEConfig(_Model):
    circuit: CircuitSpec = CircuitSpec(n=8, layers=2)
    methods: List[Method] = ["sweep", "parameter_shift_gd", "spsa"]
    sweep: SweepSpec = SweepSpec()
    gd: GDSpec = GDSpec()
    spsa: SPSASpec = SPSASpec()
    seed: int = 0


CONFIGS = {
    "env-check": EnvCheckConfig,
    "tomo-bench": TomoBenchConfig,
    "optgate-bench": OptGateBenchConfig,
    "gateset-overhead": GatesetOverheadConfig,
    "cover-search": CoverSearchConfig,
    "vqe": VQEConfig,
}


# ------------------------------------------------------------------ helpers


@dataclass
class Table:
    name: str
    columns: tuple
    rows: list = field(default_factory=list)
    passed: bool = True


def rngs(seed: int, count: int) -> list:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def build_problem(spec: CircuitSpec, rng: np.random.Generator) -> tuple[Circuit, Hamiltonian, int]:
    c = staircase_ansatz(spec.n, spec.layers, rng)
    h = Hamiltonian.ising(spec.n, spec.jz, spec.hx)
    gi = len(c.gates) // 2 if spec.gate_index is None else spec.gate_index
    if gi >= len(c.gates):
        raise ValueError(f"gate_index {gi} out of range for {len(c.gates)} gates")
    return c, h, gi


def error_env(estimate: EnvironmentTensor, exact: EnvironmentTensor, check: np.ndarray) -> float:
    """Relative 2-norm distance of the reduced costs over a set of check unitaries."""
    f_exact = contract_many(exact, check)
    return float(np.linalg.norm(contract_many(estimate, check) - f_exact) / np.linalg.norm(f_exact))


def error_ener(u_opt: np.ndarray, exact: EnvironmentTensor, f_min: float) -> float:
    """Relative energy excess of a gate optimized on an estimated environment."""
    return abs(contract(exact, u_opt) - f_min) / abs(f_min)


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def estimate(slot: GateSlot, estimator: str, shots: int, rng: np.random.Generator) -> EnvironmentTensor:
    if estimator == "tableaux":
        cover = builtin_cover_2q() if slot.k == 2 else builtin_cover_1q()
        per = max(1, shots // cover.n_gates)
        return tableaux_tomography(slot.circuit, slot.hamiltonian, slot.index, cover, per, rng, slot=slot).estimate
    source = "haar" if estimator == "uniform_haar" else "clifford_group"
    est = "closed_form_shadow" if estimator == "uniform_shadow" else "regression"
    return uniform_tomography(slot.circuit, slot.hamiltonian, slot.index, shots, source, est, rng, slot=slot).estimate


# ------------------------------------------------------------------ subcommands


def run_env_check(cfg: EnvCheckConfig) -> Table:
    rng = np.random.default_rng(cfg.seed)
    c, h, gi = build_problem(cfg.circuit, rng)
    slot = GateSlot(c, h, gi)
    e = EnvironmentTensor(slot.environment_matrix())
    us = haar_random_unitaries(e.d, cfg.n_random, rng)
    sim = slot.energies(us)
    proj = measurable_projection(e)
    coeff = horizontal_decompose(e)
    checks = [
        ("hermiticity", e.hermiticity_error(), 1e-10),
        ("contract_vs_simulator", float(np.max(np.abs(contract_many(e, us) - sim))), 1e-9),
        ("measurable_projection_invariance", float(np.max(np.abs(contract_many(proj, us) - sim))), 1e-9),
        ("horizontal_round_trip", float(np.max(np.abs(horizontal_reconstruct(coeff).matrix - e.matrix))), 1e-12),
        ("horizontal_coefficients_real", float(np.max(np.abs(np.imag(coeff)))), 1e-9),
        ("projection_idempotence", (measurable_projection(proj) - proj).norm(), 1e-12),
        ("relevant_pair_count", float(abs(int(measurable_mask(e.k).sum()) - count_relevant(e.k))), 0.0),
    ]
    table = Table("env_check", ("check", "value", "tolerance", "passed"))
    for name, value, tol in checks:
        ok = value <= tol
        table.rows.append((name, value, tol, int(ok)))
        table.passed &= ok
    return table


def run_tomo_bench(cfg: TomoBenchConfig) -> Table:
    master = np.random.default_rng(cfg.seed)
    c, h, gi = build_problem(cfg.circuit, master)
    slot = GateSlot(c, h, gi)
    exact = EnvironmentTensor(slot.environment_matrix())
    truth = measurable_projection(exact)
    check = haar_random_unitaries(exact.d, cfg.n_check, master)
    table = Table("tomo_bench", ("estimator", "shots", "repeat", "error_env", "frobenius_error"))
    streams = rngs(cfg.seed + 1, len(cfg.estimators) * len(cfg.shots) * cfg.repeats)
    it = iter(streams)
    for est in cfg.estimators:
        for shots in cfg.shots:
            for r in range(cfg.repeats):
                e_hat = estimate(slot, est, shots, next(it))
                table.rows.append((est, shots, r, error_env(e_hat, exact, check), (e_hat - truth).norm()))
    return table


def run_optgate_bench(cfg: OptGateBenchConfig) -> Table:
    master = np.random.default_rng(cfg.seed)
    table = Table("optgate_bench", ("repeat", "shots", "error_ener", "f_min"))
    gate_cfg = GateOptConfig(restarts=cfg.restarts)
    streams = iter(rngs(cfg.seed + 1, cfg.repeats * (len(cfg.shots) + 1)))
    for r in range(cfg.repeats):
        c, h, gi = build_problem(cfg.circuit, master)
        slot = GateSlot(c, h, gi)
        exact = EnvironmentTensor(slot.environment_matrix())
        _, f_min = optimal_gate(exact, GateOptConfig(restarts=4 * cfg.restarts), rng=next(streams))
        for shots in cfg.shots:
            rng = next(streams)
            e_hat = estimate(slot, cfg.estimator, shots, rng)
            e_hat = EnvironmentTensor((e_hat.matrix + e_hat.matrix.conj().T) / 2)
            u_opt, _ = optimal_gate(e_hat, gate_cfg, rng=rng)
            table.rows.append((r, shots, error_ener(u_opt, exact, f_min), f_min))
    return table


def gate_set_for(source: str, k: int, size: int, rng: np.random.Generator) -> GateSet | None:
    if source == "haar":
        return GateSet.haar(k, size, rng)
    if source == "clifford_random":
        return GateSet.random_clifford_subset(k, size, rng)
    if source == "clifford_group":
        return GateSet.clifford_group(k)
    cover = builtin_cover_2q() if k == 2 else builtin_cover_1q()
    return cover.gate_set()


def run_gateset_overhead(cfg: GatesetOverheadConfig) -> Table:
    rng = np.random.default_rng(cfg.seed)
    table = Table("gateset_overhead", ("source", "n_gates", "repeat", "trace_inv_pseudo", "ratio", "rank", "complete"))
    optimum = TWO_DESIGN_TIP[cfg.k]
    for source in cfg.sources:
        fixed = source in ("clifford_group", "builtin_cover")
        sizes = [None] if fixed else cfg.sizes
        for size in sizes:
            for r in range(1 if fixed else cfg.repeats):
                gs = gate_set_for(source, cfg.k, size or 0, rng)
                diag = design_diagnostics(build_design_matrix(gs))
                tip = diag.trace_inv_pseudo if diag.coverage_complete else float("inf")
                table.rows.append((source, len(gs), r, tip, tip / optimum, diag.rank, int(diag.coverage_complete)))
    return table


def run_cover_search(cfg: CoverSearchConfig):
    rng = np.random.default_rng(cfg.seed)
    cover = greedy_cover_search(cfg.k, cfg.pool_size, cfg.restarts, rng)
    mult = cover.multiplicity()[1:, 1:]
    n_pairs = (4**cfg.k - 1) ** 2
    table = Table("cover_stats", ("quantity", "value"))
    table.rows += [
        ("groups", len(cover)),
        ("gates", cover.n_gates),
        ("pairs_covered", int(np.count_nonzero(mult))),
        ("pairs_total", n_pairs),
        ("duplicate_pairs", int(np.sum(mult - 1))),
        ("lower_bound_groups", 4**cfg.k - 1),
        ("predicted_overhead", cover.predicted_overhead()),
    ]
    table.passed = cover.is_complete() and len(cover) >= 4**cfg.k - 1
    return cover, table


def trace_table(name: str, trace: Trace) -> Table:
    return Table(name, Trace.HEADER, trace.rows())


def run_vqe(cfg: VQEConfig) -> list:
    spec = cfg.circuit
    rng = np.random.default_rng(cfg.seed)
    h = Hamiltonian.ising(spec.n, spec.jz, spec.hx)
    tc = TemplateCircuit.staircase(spec.n, spec.layers, rng)
    streams = dict(zip(("sweep", "parameter_shift_gd", "spsa"), rngs(cfg.seed + 1, 3)))
    tables = []
    summary = Table("vqe_summary", ("method", "initial_energy", "final_energy", "best_energy", "shots", "circuits", "ground_energy"))
    ground = exact_ground_energy(h)
    for method in cfg.methods:
        r = streams[method]
        if method == "sweep":
            s = cfg.sweep
            sweep = SweepConfig(s.estimator, s.shots_per_gate, s.order, s.max_sweeps, None, s.stall_tol)
            _, trace = sweep_optimize(tc.circuit(), h, sweep, GateOptConfig(restarts=s.restarts), "sampled", r)
        elif method == "parameter_shift_gd":
            g = cfg.gd
            _, trace = parameter_shift_gd(tc, h, GDConfig(g.learning_rate, g.shots_per_circuit, g.max_iters), r)
        else:
            p = cfg.spsa
            conf = SPSAConfig(p.shots_per_evaluation, p.a, p.c, p.big_a, max_iters=p.max_iters)
            _, trace = spsa(tc, h, conf, r)
        tables.append(trace_table(f"vqe_{method}", trace))
        e = trace.energies
        summary.rows.append((method, e[0], e[-1], e.min(), int(trace.shots[-1]), int(trace.circuits[-1]), ground))
    tables.append(summary)
    return tables


def resources_at(trace: Trace, threshold: float) -> tuple[float, float]:
    """``(shots, circuits)`` spent when the trace first reaches ``threshold`` (inf if never)."""
    ev = trace.first_reaching(threshold)
    if ev is None:
        return float("inf"), float("inf")
    return float(ev.cum_shots), float(ev.cum_circuits)


def traces_from_tables(tables: list) -> dict:
    """Rebuild :class:`Trace` objects from the per-method tables of :func:`run_vqe`."""
    from qlt.optimizer import TraceEvent

    return {t.name[len("vqe_"):]: Trace([TraceEvent(*r) for r in t.rows]) for t in tables if t.name != "vqe_summary"}


def vqe_resource_ordering(seeds, base: VQEConfig | None = None) -> dict:
    """Shots and unique circuits each method spends to reach a matched energy.

    Per seed the threshold is the worst of the methods' best energies, so
    every method reaches it; resources are read at the first crossing and
    averaged over seeds.
    """
    base = VQEConfig() if base is None else base
    per_seed = []
    for seed in seeds:
        traces = traces_from_tables(run_vqe(base.model_copy(update={"seed": int(seed)})))
        threshold = max(float(t.energies.min()) for t in traces.values())
        per_seed.append({m: resources_at(t, threshold) for m, t in traces.items()} | {"threshold": threshold})
    methods = [m for m in per_seed[0] if m != "threshold"]
    mean = {m: tuple(float(np.mean([row[m][i] for row in per_seed])) for i in (0, 1)) for m in methods}
    return {"per_seed": per_seed, "mean_shots": {m: v[0] for m, v in mean.items()},
            "mean_circuits": {m: v[1] for m, v in mean.items()}}
