"""Evolution-time bounds and state-preparation recipes built on the clause network."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import oracle
from .dynamics import Mode, NetworkConfig, case_factors, check_time, evolve
from .errors import ZeroProbabilityError
from .formula import CnfFormula, Kind, bits_to_index, sector_table
from .qstate import (
    JointState,
    PureState,
    dense_partial_trace,
    operator_norm_distance,
    postselect,
    purify,
    trace_norm_distance,
    uniform_superposition,
)


def _check_epsilon(epsilon: float):
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")


def _check_positive(**values):
    for name, v in values.items():
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")


# ---------------------------------------------------------------------------
# Time bounds


def all_correct_probability(t: float, N: int, gamma: float = 1.0) -> float:
    """(1 - e^{-gamma t})^N: chance that all N ancillas of a basis input read correctly."""
    if math.isinf(t):
        return 1.0
    return float(-math.expm1(-gamma * t)) ** N


def _log_all_correct(t: float, N: int, gamma: float) -> float:
    if gamma * t == 0:
        return -math.inf
    return N * math.log1p(-math.exp(-gamma * t))


def _nudge_up(t: float, ok) -> float:
    """First time at or above ``t`` where ``ok`` holds; steps start at 1e-15 relative and double."""
    step = max(abs(t), 1e-300) * 1e-15
    while not ok(t):
        t += step
        step *= 2
    return t


def sufficient_time_ancilla(N: int, epsilon: float, gamma: float = 1.0) -> float:
    """Smallest t with (1 - e^{-gamma t})^N >= 1 - epsilon.

    Solved exactly, t = -ln(1 - (1-eps)^{1/N}) / gamma, then nudged upward
    until the inequality holds in floating point (checked in log space).
    """
    _check_epsilon(epsilon)
    _check_positive(N=N, gamma=gamma)
    root = -math.expm1(math.log1p(-epsilon) / N)  # 1 - (1 - eps)^{1/N}
    target = math.log1p(-epsilon)
    return _nudge_up(-math.log(root) / gamma, lambda t: _log_all_correct(t, N, gamma) >= target)


def log_bound_time(N: int, epsilon: float, gamma: float = 1.0) -> float:
    """The looser closed form ln((N + eps)/eps) / gamma, also sufficient."""
    _check_epsilon(epsilon)
    return math.log((N + epsilon) / epsilon) / gamma


def same_sector_bound(t: float, N: int, gamma: float = 1.0) -> float:
    """2 (1 - (1 - e^{-gamma t})^N): trace distance of a same-sector element to its limit."""
    check_time(t)
    if math.isinf(t):
        return 0.0
    return -2.0 * math.expm1(_log_all_correct(t, N, gamma))


def differing_sector_bound(t: float, N: int, m: int, gamma: float = 1.0) -> float:
    """Trace-norm bound for an element whose clause values differ in ``m`` of ``N`` clauses.

    Evaluates e^{-gamma t m/2} * sum_k C(N-m, k) e^{-gamma k t} (1-e^{-gamma t})^{N-m-k}
    term by term; the sum is 1 by the binomial theorem.
    """
    check_time(t)
    if not 1 <= m <= N:
        raise ValueError(f"need 1 <= m <= N, got m={m}, N={N}")
    if math.isinf(t):
        return 0.0
    d = math.exp(-gamma * t)
    total = sum(math.comb(N - m, k) * d**k * (1 - d) ** (N - m - k) for k in range(N - m + 1))
    return math.exp(-gamma * t * m / 2) * total


def sufficient_time_full(n: int, N: int, epsilon: float, gamma: float = 1.0) -> float:
    """Evolution time guaranteeing ||rho_t - rho_inf||_1 <= epsilon for any n-qubit input.

    Uses the triangle inequality over the 4^n matrix elements of the input,
    so every element must be within epsilon / 4^n of its limit:

    * same-sector elements: 2 (1 - (1-e^{-gamma t})^N) <= epsilon / 4^n
    * differing elements (worst case m = 1): e^{-gamma t / 2} <= epsilon / 4^n

    The larger of the two exact solutions is returned.  The bound is loose by
    construction (the 4^n factor), which makes t grow like 4 ln 2 * n / gamma.
    """
    _check_epsilon(epsilon)
    _check_positive(n=n, N=N, gamma=gamma)
    per_element = epsilon / 4.0**n
    t_same = sufficient_time_ancilla(N, per_element / 2.0, gamma)
    t_diff = 2.0 * math.log(1.0 / per_element) / gamma
    return _nudge_up(
        max(t_same, t_diff),
        lambda t: same_sector_bound(t, N, gamma) <= per_element
        and differing_sector_bound(t, N, 1, gamma) <= per_element,
    )


@dataclass(frozen=True)
class TimeBudget:
    n: int
    N: int
    epsilon: float
    gamma: float
    t_ancilla: float  # all N clause readouts correct with probability >= 1 - epsilon
    t_full: float  # trace distance to the fixed point <= epsilon


def time_budget(n: int, N: int, epsilon: float, gamma: float = 1.0) -> TimeBudget:
    return TimeBudget(
        n, N, epsilon, gamma,
        sufficient_time_ancilla(N, epsilon, gamma),
        sufficient_time_full(n, N, epsilon, gamma),
    )


def element_distance(net: NetworkConfig, x: int, y: int, t: float) -> float:
    """||E_t(|x><y| (x) A0) - E_inf(|x><y| (x) A0)||_1, densified.

    ``|x><y| (x) B`` has trace norm ||B||_1, so only the ancilla part is
    expanded, but the norm itself is a full singular-value sum.
    """
    labels = sector_table(net.formula, np.array([x, y]))
    idx = np.arange(net.N)

    def ancilla_block(time):
        factors = case_factors(net, time)[idx, labels[0], labels[1]]
        A = np.ones((1, 1), dtype=complex)
        for F in factors:
            A = np.kron(A, F)
        return A

    return trace_norm_distance(ancilla_block(t), ancilla_block(math.inf))


# ---------------------------------------------------------------------------
# Bell-state preparation

BELL_FORMULA = CnfFormula.from_ints(2, [[1, -2], [-1, 2]])
PSI_PLUS = PureState(2, {0b00: 1 / math.sqrt(2), 0b11: 1 / math.sqrt(2)})
PLUS_PLUS = uniform_superposition(2)
BELL_GRID = tuple(0.5 * k for k in range(1, 21))


@dataclass(frozen=True)
class BellPrep:
    state: PureState | np.ndarray
    success_probability: float
    t: float
    gamma: float
    series: tuple[tuple[float, float, float], ...]  # (gamma*t, operator distance, success probability)


def bell_point(t: float, gamma: float = 1.0):
    """(post-selected state, probability of reading (1,1), operator distance to |psi+>)."""
    net = NetworkConfig(BELL_FORMULA, gamma)
    state, prob = postselect(evolve(net, PLUS_PLUS, t), (1, 1))
    rho = state.density() if isinstance(state, PureState) else state
    return state, prob, operator_norm_distance(rho, PSI_PLUS.density())


def prep_bell(t: float, gamma: float = 1.0, grid: Sequence[float] = BELL_GRID) -> BellPrep:
    """Prepare (|00>+|11>)/sqrt 2 from |++> by post-selecting both ancillas on 1.

    ``grid`` is in units of 1/gamma; the returned series feeds the distance
    plot.
    """
    state, prob, _ = bell_point(t, gamma)
    series = []
    for s in grid:
        _, p, d = bell_point(s / gamma, gamma)
        series.append((float(s), d, p))
    return BellPrep(state, prob, t, gamma, tuple(series))


def bell_series_oracle(grid: Sequence[float] = BELL_GRID, gamma: float = 1.0, dt: float | None = None):
    """The same series from the brute-force integrator: (gamma*t, distance, probability)."""
    net = NetworkConfig(BELL_FORMULA, gamma)
    rho0 = oracle.initial_density(net, PLUS_PLUS.density())
    times = [s / gamma for s in grid]
    keep = np.zeros((4, 4))
    keep[3, 3] = 1.0  # ancillas |11>
    proj = np.kron(np.eye(4), keep)
    rows = []
    for s, rho in zip(grid, oracle.trajectory(net, rho0, times, dt)):
        block = dense_partial_trace(proj @ rho @ proj, 2, 2)
        p = float(np.real(np.trace(block)))
        rows.append((float(s), operator_norm_distance(block / p, PSI_PLUS.density()), p))
    return rows


def fit_log_decay(ts, distances) -> tuple[float, float, float]:
    """Least-squares line through (t, log d): (slope, intercept, max |residual|)."""
    ts = np.asarray(ts, dtype=float)
    logs = np.log(np.asarray(distances, dtype=float))
    A = np.vstack([ts, np.ones_like(ts)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, logs, rcond=None)
    residual = float(np.max(np.abs(A @ np.array([slope, intercept]) - logs)))
    return float(slope), float(intercept), residual


# ---------------------------------------------------------------------------
# PAC states


def pac_amplitudes(distribution: Mapping, n: int, tol: float = 1e-12) -> PureState:
    """sum_x sqrt(p(x)) |x> from a map assignment -> probability.

    Keys may be basis indices, bit strings or bit tuples.
    """
    total = sum(distribution.values())
    if abs(total - 1.0) > tol:
        raise ValueError(f"distribution sums to {total}, not 1")
    amps = {}
    for key, p in distribution.items():
        if p < 0:
            raise ValueError("negative probability")
        if isinstance(key, str):
            key = int(key, 2)
        elif not isinstance(key, (int, np.integer)):
            key = bits_to_index(key)
        amps[int(key)] = math.sqrt(p)
    return PureState(n, amps)


def prep_pac(source, formula: CnfFormula, t: float = math.inf, gamma: float = 1.0):
    """Attach the clause evaluations of ``formula`` to every branch of the input.

    ``source`` is a normalized :class:`PureState` (complex amplitudes allowed)
    or a probability map.  At ``t = inf`` the result is the pure state
    sum_x a_x |x>|C_1(x)...C_N(x)> over n + N qubits; at finite t the mixed
    :class:`JointState` is returned.
    """
    psi = source if isinstance(source, PureState) else pac_amplitudes(source, formula.variable_count)
    net = NetworkConfig(formula, gamma, Mode.PAC)
    joint = evolve(net, psi, t)
    if not math.isinf(t):
        return joint
    out = purify(joint)
    if out is None:  # pragma: no cover - PAC limit factors are always rank one
        raise RuntimeError("PAC fixed point unexpectedly mixed")
    return out


# ---------------------------------------------------------------------------
# Superposition of satisfying assignments


def sat_superposition(formula: CnfFormula, t: float = math.inf, gamma: float = 1.0):
    """Evolve the uniform superposition and post-select every ancilla on 1.

    Returns ``(state, probability)``.  At ``t = inf`` the state is the uniform
    superposition of all satisfying assignments and the probability is
    (#solutions) / 2^n; for an unsatisfiable formula ``(None, 0.0)``.
    """
    if formula.kind is not Kind.CNF:
        raise ValueError("sat_superposition expects a CNF formula")
    net = NetworkConfig(formula, gamma)
    joint: JointState = evolve(net, uniform_superposition(formula.variable_count), t)
    try:
        return postselect(joint, (1,) * net.N)
    except ZeroProbabilityError:
        return None, 0.0
