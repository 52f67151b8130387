"""Self-check suite: closed-form evolution against the brute-force integrator,
fixed points, and the finite-time trace-norm bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import oracle
from .apps import differing_sector_bound, element_distance, same_sector_bound
from .dynamics import Mode, NetworkConfig, evolve, fixed_point_projection, pac_fixed_point
from .formula import CnfFormula, Kind, random_cnf, sector_table
from .qstate import JointState, densify, fidelity, purify, random_state, trace_norm_distance

ORACLE_TIMES = (0.1, 1.0, 2.0)
ORACLE_TOL = 1e-6
EXACT_TOL = 1e-10


@dataclass(frozen=True)
class CheckResult:
    check: str
    case: str
    t: float
    measured: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.measured <= self.tolerance


def describe(net: NetworkConfig) -> str:
    clauses = " ".join("(" + " ".join(map(str, c)) + ")" for c in net.formula.to_ints())
    return f"{net.formula.kind.value} n={net.n} {clauses} mode={net.mode.value} gamma={net.gamma:g}"


def _with_fault(joint: JointState) -> JointState:
    """Flip the sign of every cross-sector coherence factor (a deliberate bug)."""
    factors = joint.case_factors.copy()
    factors[:, 0, 1] *= -1
    factors[:, 1, 0] *= -1
    return JointState(joint.n, joint.support, joint.labels, joint.coeffs, factors)


def random_networks(rng: np.random.Generator, count: int, max_qubits: int):
    """Small random networks with n + N <= max_qubits, cycling through modes and kinds."""
    combos = [(Mode.STANDARD, Kind.CNF), (Mode.STANDARD, Kind.DNF), (Mode.PAC, Kind.CNF), (Mode.PAC, Kind.DNF)]
    out = []
    for k in range(count):
        n = int(rng.integers(1, 4))
        N = int(rng.integers(1, 3))
        while n + N > max_qubits and n + N > 2:
            if N > 1:
                N -= 1
            else:
                n -= 1
        mode, kind = combos[k % len(combos)]
        gamma = float(rng.choice([0.5, 1.0, 2.0]))
        out.append(NetworkConfig(random_cnf(n, N, rng, kind=kind), gamma, mode))
    return out


def check_oracle(nets, rng, times=ORACLE_TIMES, fault=False, limit=oracle.ORACLE_LIMIT):
    results = []
    for net in nets:
        psi = random_state(net.n, rng)
        rho0 = oracle.initial_density(net, psi.density())
        snaps = oracle.trajectory(net, rho0, [t / net.gamma for t in times], limit=limit)
        for t, rho in zip(times, snaps):
            joint = evolve(net, psi, t / net.gamma)
            if fault:
                joint = _with_fault(joint)
            d = trace_norm_distance(densify(joint), rho)
            results.append(CheckResult("analytic_vs_oracle", describe(net), t, d, ORACLE_TOL))
    return results


def check_fixed_points(nets, rng, oracle_count=2, limit=oracle.ORACLE_LIMIT):
    results = []
    for k, net in enumerate(nets):
        psi = random_state(net.n, rng)
        joint = evolve(net, psi, math.inf)
        if net.mode is Mode.STANDARD:
            expected = fixed_point_projection(net.formula, psi.density())
            d = trace_norm_distance(densify(joint), expected)
            results.append(CheckResult("fixed_point_projection", describe(net), math.inf, d, EXACT_TOL))
            if k < oracle_count:
                rho0 = oracle.initial_density(net, psi.density())
                rho = oracle.integrate(net, rho0, 50.0 / net.gamma, limit=limit)
                d = trace_norm_distance(rho, expected)
                results.append(CheckResult("oracle_fixed_point", describe(net), 50.0, d, ORACLE_TOL))
        else:
            pure = purify(joint)
            expected = pac_fixed_point(net.formula, psi)
            infidelity = 1.0 if pure is None else 1.0 - fidelity(expected, pure)
            results.append(CheckResult("pac_fixed_point", describe(net), math.inf, abs(infidelity), EXACT_TOL))
    return results


def check_bounds(nets, rng, times=(0.5, 1.0, 3.0)):
    """Every matrix element stays within its trace-norm bound; the all-clauses-false
    diagonal element of a single clause saturates the same-sector bound."""
    results = []
    for net in nets:
        if net.mode is not Mode.STANDARD or net.formula.kind is not Kind.CNF:
            continue
        dim = 1 << net.n
        pairs = rng.integers(0, dim, size=(6, 2))
        labels = sector_table(net.formula)
        for t in times:
            worst = 0.0
            for x, y in pairs:
                m = int(np.sum(labels[x] != labels[y]))
                bound = same_sector_bound(t, net.N) if m == 0 else differing_sector_bound(t, net.N, m)
                worst = max(worst, element_distance(NetworkConfig(net.formula), int(x), int(y), t) - bound)
            results.append(CheckResult("element_bound", describe(net), t, max(worst, 0.0), EXACT_TOL))
    single = NetworkConfig(CnfFormula.from_ints(1, [[1]]))
    for t in times:
        gap = abs(element_distance(single, 0, 0, t) - same_sector_bound(t, 1))
        results.append(CheckResult("same_sector_equality", describe(single), t, gap, EXACT_TOL))
    return results


def run_verification(seed: int = 0, count: int = 8, max_qubits: int = oracle.ORACLE_LIMIT, inject_fault: bool = False):
    """All checks on ``count`` seeded random networks; returns a list of :class:`CheckResult`."""
    rng = np.random.default_rng(seed)
    nets = random_networks(rng, count, max_qubits)
    results = check_oracle(nets, rng, fault=inject_fault, limit=max_qubits)
    results += check_fixed_points(nets, rng, limit=max_qubits)
    results += check_bounds(nets, rng)
    return results


def format_table(results) -> str:
    lines = [f"{'check':<24} {'t*gamma':>8} {'measured':>12} {'tol':>8}  status  case"]
    for r in results:
        status = "pass" if r.passed else "FAIL"
        lines.append(f"{r.check:<24} {r.t:>8.3g} {r.measured:>12.3e} {r.tolerance:>8.0e}  {status:<6}  {r.case}")
    failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"
