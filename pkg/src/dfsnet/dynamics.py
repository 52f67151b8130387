"""Closed-form evolution of the dissipative clause network.

Each clause couples its variables to one ancilla through a single jump
operator.  The clause generators commute and each one only moves its own
ancilla, so a matrix element ``|x><y| (x) A_1 (x) ... (x) A_N`` evolves into
``|x><y| (x) F_1 (x) ... (x) F_N`` where ``F_i`` depends only on the pair of
clause values ``(C_i(x), C_i(y))``, on ``gamma * t`` and on the initial
ancilla block.  Those per-clause channels are solved here in closed form.

Time is a float; ``math.inf`` selects the exact long-time limit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError
from .formula import CnfFormula, Kind, is_normalized, partition, sector_table
from .qstate import DENSE_LIMIT, JointState, PureState, check_density

KET = (np.array([1.0, 0.0]), np.array([0.0, 1.0]))
PLUS = np.full((2, 2), 0.5, dtype=complex)


def proj(bit: int) -> np.ndarray:
    out = np.zeros((2, 2), dtype=complex)
    out[bit, bit] = 1.0
    return out


class Mode(enum.Enum):
    STANDARD = "standard"  # jump Pi (x) sigma: ancilla starts at its resting level
    PAC = "pac"  # jump Pi (x) sigma + (1 - Pi) (x) sigma^dagger: ancilla starts in |+>


@dataclass(frozen=True)
class NetworkConfig:
    formula: CnfFormula
    gamma: float = 1.0
    mode: Mode = Mode.STANDARD

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be positive and finite, got {self.gamma}")
        if not is_normalized(self.formula):
            raise ValueError("formula has repeated variables in a clause; normalize it first")
        long = [i + 1 for i, c in enumerate(self.formula.clauses) if len(c) > 3]
        if long:
            raise ValueError(f"clauses {long} have more than 3 literals; use to_three_cnf")
        object.__setattr__(self, "mode", Mode(self.mode))

    @property
    def n(self) -> int:
        return self.formula.variable_count

    @property
    def N(self) -> int:
        return self.formula.num_clauses

    @property
    def resting_level(self) -> int:
        """Ancilla level that a standard-mode ancilla starts in and keeps while inactive."""
        return 1 if self.formula.kind is Kind.CNF else 0

    def ancilla_initial(self) -> np.ndarray:
        if self.mode is Mode.PAC:
            return PLUS.copy()
        return proj(self.resting_level)


def check_time(t: float) -> float:
    t = float(t)
    if math.isnan(t) or t < 0:
        raise ValueError(f"evolution time must be >= 0 or inf, got {t}")
    return t


def _decay(rate: float, t: float) -> float:
    """exp(-rate * t) with the t = inf limit taken exactly."""
    if rate == 0:
        return 1.0
    if math.isinf(t):
        return 0.0
    return math.exp(-rate * t)


def _jump_source(c: int, mode: Mode, kind: Kind) -> int | None:
    """Ancilla level that the jump empties on one side of a matrix element.

    ``None`` means the jump annihilates that side.  The jump always moves
    the ancilla from the source level to the other level.
    """
    if mode is Mode.PAC:
        return 1 - c
    if kind is Kind.CNF:
        return 1 if c == 0 else None
    return 0 if c == 1 else None


def two_level_channel(src_x, src_y, gamma: float, t: float, ancilla_in) -> np.ndarray:
    """Exact solution of the single-clause ancilla dynamics.

    Entry ``(i, j)`` of the ancilla block decays at rate
    ``gamma/2 * ([i == src_x] + [j == src_y])``; when both sides are active
    the population of ``(src_x, src_y)`` is transferred to
    ``(1 - src_x, 1 - src_y)``, which itself does not decay.
    """
    t = check_time(t)
    A = np.asarray(ancilla_in, dtype=complex)
    out = np.empty((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            rate = 0.5 * gamma * ((i == src_x) + (j == src_y))
            out[i, j] = A[i, j] * _decay(rate, t)
    if src_x is not None and src_y is not None:
        out[1 - src_x, 1 - src_y] += A[src_x, src_y] * (1.0 - _decay(gamma, t))
    return out


def two_level_generator(src_x, src_y, gamma: float) -> np.ndarray:
    """4x4 generator of :func:`two_level_channel` on row-major vec(A)."""
    G = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            G[2 * i + j, 2 * i + j] = -0.5 * gamma * ((i == src_x) + (j == src_y))
    if src_x is not None and src_y is not None:
        G[2 * (1 - src_x) + (1 - src_y), 2 * src_x + src_y] += gamma
    return G


def clause_factor_standard(c_x: int, c_y: int, gamma: float, t: float, kind: Kind = Kind.CNF) -> np.ndarray:
    """Ancilla factor for a pair with clause values (c_x, c_y), ancilla started at rest.

    For CNF the resting level is |1>:
    ``e^{-gt}|1><1| + (1-e^{-gt})|c><c|`` if ``c_x == c_y == c``, and
    ``e^{-gt/2}|1><1|`` otherwise.  DNF swaps the roles of |0> and |1>.
    """
    t = check_time(t)
    rest = 1 if kind is Kind.CNF else 0
    if c_x == c_y:
        if c_x == rest:
            # satisfied-side pair: the jump annihilates both sides
            return proj(rest)
        if math.isinf(t):
            return proj(c_x)
        d = math.exp(-gamma * t)
        return d * proj(rest) + (1.0 - d) * proj(c_x)
    return _decay(0.5 * gamma, t) * proj(rest)


def clause_channel_standard(c_x, c_y, gamma, t, ancilla_in, kind: Kind = Kind.CNF) -> np.ndarray:
    """Standard-mode clause channel applied to an arbitrary ancilla block."""
    return two_level_channel(
        _jump_source(c_x, Mode.STANDARD, kind), _jump_source(c_y, Mode.STANDARD, kind), gamma, t, ancilla_in
    )


def clause_channel_pac(c_x: int, c_y: int, gamma: float, t: float, ancilla_in=PLUS) -> np.ndarray:
    """PAC-mode clause channel: each side is pumped toward |C(x)> resp. |C(y)>.

    With ``ancilla_in = |+><+|`` and ``t = inf`` this is exactly ``|c_x><c_y|``.
    """
    return two_level_channel(1 - c_x, 1 - c_y, gamma, t, ancilla_in)


def pac_generator(c_x: int, c_y: int, gamma: float) -> np.ndarray:
    return two_level_generator(1 - c_x, 1 - c_y, gamma)


def standard_generator(c_x: int, c_y: int, gamma: float, kind: Kind = Kind.CNF) -> np.ndarray:
    return two_level_generator(
        _jump_source(c_x, Mode.STANDARD, kind), _jump_source(c_y, Mode.STANDARD, kind), gamma
    )


def case_factors(net: NetworkConfig, t: float) -> np.ndarray:
    """``(N, 2, 2, 2, 2)`` table of ancilla factors indexed by clause and (c_x, c_y)."""
    t = check_time(t)
    table = np.empty((2, 2, 2, 2), dtype=complex)
    for cx in (0, 1):
        for cy in (0, 1):
            if net.mode is Mode.STANDARD:
                table[cx, cy] = clause_factor_standard(cx, cy, net.gamma, t, net.formula.kind)
            else:
                table[cx, cy] = clause_channel_pac(cx, cy, net.gamma, t, net.ancilla_initial())
    return np.broadcast_to(table, (net.N, 2, 2, 2, 2)).copy()


def evolve(net: NetworkConfig, psi: PureState, t: float) -> JointState:
    """Evolve ``|psi><psi| (x) ancillas`` for time ``t`` (cost O(s^2 N) at most)."""
    if psi.n != net.n:
        raise ValueError(f"state has {psi.n} qubits, network expects {net.n}")
    if not psi.is_normalized():
        raise ValueError("input state is not normalized")
    support = psi.support
    labels = sector_table(net.formula, support)
    return JointState(net.n, support, labels, psi.values, case_factors(net, t))


def evolve_density(net: NetworkConfig, rho, t: float) -> JointState:
    """Linear extension of :func:`evolve` to a dense system density matrix."""
    if net.n > DENSE_LIMIT:
        raise CapacityError(f"dense input over {net.n} qubits exceeds limit {DENSE_LIMIT}")
    rho = check_density(rho)
    if rho.shape[0] != 1 << net.n:
        raise ValueError("density dimension does not match the network")
    support = np.flatnonzero(np.abs(np.diag(rho)) > 0)
    labels = sector_table(net.formula, support)
    coeffs = rho[np.ix_(support, support)]
    return JointState(net.n, support, labels, coeffs, case_factors(net, t))


def fixed_point_projection(formula: CnfFormula, rho, limit: int = DENSE_LIMIT) -> np.ndarray:
    """sum_C Pi_C rho Pi_C (x) |C><C|, built directly from the sector partition."""
    n, N = formula.variable_count, formula.num_clauses
    if n + N > limit:
        raise CapacityError(f"fixed point over {n + N} qubits exceeds limit {limit}")
    rho = np.asarray(rho, dtype=complex)
    out = np.zeros((1 << (n + N), 1 << (n + N)), dtype=complex)
    for label, projector in sector_projectors(formula).items():
        anc = np.zeros((1 << N, 1 << N))
        a = int("".join(map(str, label)), 2) if N else 0
        anc[a, a] = 1.0
        out += np.kron(projector @ rho @ projector, anc)
    return out


def sector_projectors(formula: CnfFormula) -> dict[tuple[int, ...], np.ndarray]:
    """Dense projector onto each nonempty sector."""
    n = formula.variable_count
    if n > DENSE_LIMIT:
        raise CapacityError(f"projectors over {n} qubits exceed limit {DENSE_LIMIT}")
    projectors = {}
    for label, members in partition(formula).items():
        P = np.zeros((1 << n, 1 << n))
        for bits in members:
            k = int("".join(map(str, bits)), 2)
            P[k, k] = 1.0
        projectors[label] = P
    return projectors


def dephasing_equivalent(formula: CnfFormula, rho) -> np.ndarray:
    """Zero every coherence |x><y| whose sector labels differ."""
    n = formula.variable_count
    if n > DENSE_LIMIT:
        raise CapacityError(f"dense input over {n} qubits exceeds limit {DENSE_LIMIT}")
    rho = np.asarray(rho, dtype=complex)
    labels = sector_table(formula)
    same = (labels[:, None, :] == labels[None, :, :]).all(axis=2)
    return np.where(same, rho, 0)


def pac_fixed_point(formula: CnfFormula, psi: PureState) -> PureState:
    """sum_x a_x |x>|C_1(x) ... C_N(x)> computed directly from clause evaluations."""
    N = formula.num_clauses
    labels = sector_table(formula, psi.support)
    weights = (1 << np.arange(N - 1, -1, -1, dtype=np.int64)) if N else np.zeros(0, np.int64)
    anc = labels.astype(np.int64) @ weights
    joint = (psi.support << N) | anc
    return PureState(psi.n + N, dict(zip(joint.tolist(), psi.values)))
