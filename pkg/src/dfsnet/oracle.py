"""Brute-force reference integrator for the clause network.

Builds every jump operator explicitly on the full system+ancilla space and
integrates the master equation with fixed-step RK4.  Nothing here uses the
closed-form factors in :mod:`dfsnet.dynamics`, so the two can be compared.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp

from .dynamics import Mode, NetworkConfig, check_time
from .errors import CapacityError, DfsNetError
from .formula import Clause, Kind

ORACLE_LIMIT = 10
TRACE_DRIFT = 1e-8

I2 = np.eye(2)
SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]])  # |0><1|
SIGMA_PLUS = SIGMA_MINUS.T


class TraceDriftError(DfsNetError):
    pass


def _check_capacity(net: NetworkConfig, limit: int):
    if net.n + net.N > limit:
        raise CapacityError(f"oracle over {net.n + net.N} qubits exceeds limit {limit}")


def embed(ops: dict[int, np.ndarray], total: int) -> sp.csr_matrix:
    """Tensor product with ``ops[k]`` on qubit ``k`` (0-based) and identity elsewhere."""
    out = sp.identity(1, dtype=complex, format="csr")
    for k in range(total):
        out = sp.kron(out, sp.csr_matrix(ops.get(k, I2)), format="csr")
    return out


def build_jump(clause: Clause, clause_index: int, net: NetworkConfig) -> sp.csr_matrix:
    """Jump operator of one clause as a sparse (n+N)-qubit matrix.

    Standard CNF: ``Pi (x) sigma^-`` with ``Pi`` projecting onto the
    all-literals-false pattern.  Standard DNF: ``Pi (x) sigma^+`` with ``Pi``
    on the all-literals-true pattern.  PAC mode adds ``(1 - Pi) (x) sigma``
    with the opposite ladder operator.
    """
    total = net.n + net.N
    ancilla = net.n + clause_index
    pattern = {v - 1: np.diag([1.0 - b, float(b)]) for v, b in clause.jump_pattern().items()}
    ladder = SIGMA_MINUS if clause.kind is Kind.CNF else SIGMA_PLUS
    other = SIGMA_PLUS if clause.kind is Kind.CNF else SIGMA_MINUS
    L = embed({**pattern, ancilla: ladder}, total)
    if net.mode is Mode.PAC:
        projector = embed(pattern, total)
        identity = sp.identity(1 << total, dtype=complex, format="csr")
        L = L + (identity - projector) @ embed({ancilla: other}, total)
    return L.tocsr()


def jump_operators(net: NetworkConfig) -> list[sp.csr_matrix]:
    return [build_jump(c, i, net) for i, c in enumerate(net.formula.clauses)]


def initial_density(net: NetworkConfig, rho_system) -> np.ndarray:
    """rho_system (x) (initial ancilla block)^{(x) N}."""
    out = np.asarray(rho_system, dtype=complex)
    for _ in range(net.N):
        out = np.kron(out, net.ancilla_initial())
    return out


def apply_lindbladian(net: NetworkConfig, rho, limit: int = ORACLE_LIMIT) -> np.ndarray:
    """sum_i gamma (L_i rho L_i^+ - 1/2 {L_i^+ L_i, rho})."""
    _check_capacity(net, limit)
    rho = np.asarray(rho, dtype=complex)
    out = np.zeros_like(rho)
    for L in jump_operators(net):
        Ld = L.conj().T
        K = (Ld @ L).tocsr()
        out += L @ (L @ rho.conj().T).conj().T - 0.5 * (K @ rho + (K @ rho.conj().T).conj().T)
    return net.gamma * out


def liouvillian(net: NetworkConfig, limit: int = ORACLE_LIMIT) -> sp.csr_matrix:
    """Sparse superoperator acting on the row-major flattening of rho."""
    _check_capacity(net, limit)
    dim = 1 << (net.n + net.N)
    eye = sp.identity(dim, dtype=complex, format="csr")
    total = sp.csr_matrix((dim * dim, dim * dim), dtype=complex)
    for L in jump_operators(net):
        K = (L.conj().T @ L).tocsr()
        total = total + sp.kron(L, L.conj()) - 0.5 * sp.kron(K, eye) - 0.5 * sp.kron(eye, K.T)
    return (net.gamma * total).tocsr()


def trajectory(net: NetworkConfig, rho0, times, dt: float | None = None, limit: int = ORACLE_LIMIT):
    """RK4 snapshots of rho(t) at each of the (sorted) ``times``.

    The state is re-symmetrized after every step; trace is never
    renormalized and drift beyond ``TRACE_DRIFT`` raises.
    """
    _check_capacity(net, limit)
    times = [check_time(t) for t in times]
    if any(math.isinf(t) for t in times):
        raise ValueError("the oracle integrates finite times only")
    if times != sorted(times):
        raise ValueError("times must be non-decreasing")
    h_max = 0.005 / net.gamma if dt is None else float(dt)
    if h_max <= 0:
        raise ValueError("dt must be positive")
    rho0 = np.asarray(rho0, dtype=complex)
    dim = rho0.shape[0]
    if dim != 1 << (net.n + net.N):
        raise ValueError("initial state has the wrong dimension")
    trace0 = np.trace(rho0)
    G = liouvillian(net, limit)

    def step(v, h):
        k1 = G @ v
        k2 = G @ (v + 0.5 * h * k1)
        k3 = G @ (v + 0.5 * h * k2)
        k4 = G @ (v + h * k3)
        v = v + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        m = v.reshape(dim, dim)
        return (0.5 * (m + m.conj().T)).ravel()

    v = rho0.ravel().copy()
    now = 0.0
    out = []
    for target in times:
        steps = math.ceil((target - now) / h_max - 1e-9)
        if steps > 0:
            h = (target - now) / steps
            for _ in range(steps):
                v = step(v, h)
                drift = abs(np.trace(v.reshape(dim, dim)) - trace0)
                if drift > TRACE_DRIFT:
                    raise TraceDriftError(
                        f"trace drifted by {drift:.3e} at t={now:.6g} (dt={h:.3g}, dim={dim})"
                    )
            now = target
        out.append(v.reshape(dim, dim).copy())
    return out


def integrate(net: NetworkConfig, rho0, t: float, dt: float | None = None, limit: int = ORACLE_LIMIT) -> np.ndarray:
    """rho(t) from the full master equation, fixed-step RK4 (default dt = 0.005/gamma)."""
    if check_time(t) == 0:
        return np.asarray(rho0, dtype=complex).copy()
    return trajectory(net, rho0, [t], dt, limit)[0]
