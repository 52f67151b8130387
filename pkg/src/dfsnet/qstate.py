"""Sparse pure states, factored system+ancilla states, and Born-rule readout.

Basis index convention: qubit 1 is the most significant bit.  In a dense
system+ancilla operator the row index is ``x * 2**N + a`` where ``a`` encodes
the ancillas, ancilla 1 most significant.

Dense density operators are plain complex ``numpy`` arrays.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Mapping

import numpy as np

from .errors import CapacityError, ParseError, ZeroProbabilityError
from .formula import SectorLabel, index_to_bits

PRUNE = 1e-15
DENSE_LIMIT = 12
STATE_LIMIT = 24
RANK_TOL = 1e-10


def _bits_str(index: int, n: int) -> str:
    return format(index, f"0{n}b") if n else ""


@dataclass(frozen=True, eq=False)
class PureState:
    """Sparse state vector: basis index -> complex amplitude.

    Amplitudes with magnitude below ``PRUNE`` are dropped on construction.
    The constructor does not normalize; use :meth:`normalized`.
    """

    n: int
    amplitudes: Mapping[int, complex]

    def __post_init__(self):
        if not 1 <= self.n <= STATE_LIMIT:
            raise CapacityError(f"{self.n} qubits outside supported range 1..{STATE_LIMIT}")
        dim = 1 << self.n
        amps = {}
        for index, amp in self.amplitudes.items():
            index = int(index)
            if not 0 <= index < dim:
                raise ValueError(f"basis index {index} out of range for {self.n} qubits")
            amp = complex(amp)
            if abs(amp) >= PRUNE:
                amps[index] = amp
        object.__setattr__(self, "amplitudes", dict(sorted(amps.items())))

    @classmethod
    def basis(cls, bits) -> PureState:
        if isinstance(bits, str):
            bits = [int(b) for b in bits]
        index = 0
        for b in bits:
            index = (index << 1) | int(b)
        return cls(len(bits), {index: 1.0})

    @classmethod
    def from_vector(cls, vector) -> PureState:
        vector = np.asarray(vector, dtype=complex).ravel()
        n = int(round(np.log2(len(vector))))
        if 1 << n != len(vector):
            raise ValueError("vector length must be a power of two")
        return cls(n, {int(i): vector[i] for i in np.flatnonzero(np.abs(vector) >= PRUNE)})

    @classmethod
    def from_bits(cls, n: int, amplitudes: Mapping[str, complex]) -> PureState:
        return cls(n, {int(bits, 2): amp for bits, amp in amplitudes.items()})

    @property
    def support(self) -> np.ndarray:
        return np.fromiter(self.amplitudes.keys(), dtype=np.int64, count=len(self.amplitudes))

    @property
    def values(self) -> np.ndarray:
        return np.fromiter(self.amplitudes.values(), dtype=complex, count=len(self.amplitudes))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2)))

    def normalized(self) -> PureState:
        norm = self.norm()
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return PureState(self.n, {k: v / norm for k, v in self.amplitudes.items()})

    def is_normalized(self, tol=1e-10) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def vector(self) -> np.ndarray:
        if self.n > STATE_LIMIT:
            raise CapacityError("state too large to densify")
        out = np.zeros(1 << self.n, dtype=complex)
        out[self.support] = self.values
        return out

    def density(self, limit: int = DENSE_LIMIT) -> np.ndarray:
        if self.n > limit:
            raise CapacityError(f"dense density over {self.n} qubits exceeds limit {limit}")
        v = self.vector()
        return np.outer(v, v.conj())

    def inner(self, other: PureState) -> complex:
        """<self|other>."""
        if self.n != other.n:
            raise ValueError("qubit count mismatch")
        return sum(
            (self.amplitudes[k].conjugate() * v for k, v in other.amplitudes.items() if k in self.amplitudes),
            0j,
        )

    def bits(self, index: int) -> tuple[int, ...]:
        return index_to_bits(index, self.n)

    def __repr__(self):
        terms = ", ".join(f"{_bits_str(k, self.n)}: {v:.6g}" for k, v in self.amplitudes.items())
        return f"PureState(n={self.n}, {{{terms}}})"


def uniform_superposition(n: int) -> PureState:
    if not 1 <= n <= STATE_LIMIT:
        raise CapacityError(f"uniform superposition needs 1 <= n <= {STATE_LIMIT}")
    amp = 2.0 ** (-n / 2)
    return PureState(n, dict.fromkeys(range(1 << n), amp))


def random_state(n: int, rng: np.random.Generator, support_size: int | None = None) -> PureState:
    """Haar-like random state: complex Gaussian amplitudes on a random support."""
    dim = 1 << n
    k = dim if support_size is None else min(support_size, dim)
    support = np.sort(rng.choice(dim, size=k, replace=False))
    amps = rng.normal(size=k) + 1j * rng.normal(size=k)
    return PureState(n, dict(zip(support.tolist(), amps))).normalized()


def fidelity(state: PureState, other) -> float:
    """|<state|other>|^2 for a pure ``other``; <state|other|state> for a density."""
    if isinstance(other, PureState):
        return float(abs(state.inner(other)) ** 2)
    v = state.vector()
    return float(np.real(v.conj() @ np.asarray(other) @ v))


# ---------------------------------------------------------------------------
# Factored system + ancilla state


@dataclass(frozen=True, eq=False)
class JointState:
    """rho = sum_{x,y} coeff(x,y) |x><y| (x) prod_i F_i(C_i(x), C_i(y)).

    ``support`` lists the system basis indices that carry weight and
    ``labels[k]`` their clause evaluations.  ``coeffs`` is either a vector of
    amplitudes ``a`` (then ``coeff(x,y) = a_x conj(a_y)``) or an explicit
    ``(s, s)`` matrix.  ``case_factors[i, cx, cy]`` is the 2x2 ancilla factor
    of clause ``i`` for a pair whose evaluations are ``(cx, cy)``.
    """

    n: int
    support: np.ndarray
    labels: np.ndarray
    coeffs: np.ndarray
    case_factors: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.int64)
        labels = np.asarray(self.labels, dtype=np.uint8).reshape(len(support), -1)
        coeffs = np.asarray(self.coeffs, dtype=complex)
        factors = np.asarray(self.case_factors, dtype=complex)
        N = labels.shape[1]
        if factors.shape != (N, 2, 2, 2, 2):
            raise ValueError(f"case_factors must have shape ({N}, 2, 2, 2, 2)")
        if coeffs.shape not in ((len(support),), (len(support), len(support))):
            raise ValueError("coeffs must be a vector or square matrix over the support")
        if coeffs.ndim == 2 and not np.allclose(coeffs, coeffs.conj().T, atol=1e-12):
            raise ValueError("coefficient matrix is not Hermitian")
        # (y,x) term must be the conjugate transpose of the (x,y) term
        swapped = np.conj(np.swapaxes(np.swapaxes(factors, 1, 2), 3, 4))
        if not np.allclose(factors, swapped, atol=1e-12):
            raise ValueError("case factors violate Hermiticity")
        for name, value in (("support", support), ("labels", labels), ("coeffs", coeffs), ("case_factors", factors)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def N(self) -> int:
        return self.labels.shape[1]

    @property
    def is_rank_one(self) -> bool:
        return self.coeffs.ndim == 1

    def coeff_matrix(self) -> np.ndarray:
        if self.is_rank_one:
            return np.outer(self.coeffs, self.coeffs.conj())
        return self.coeffs

    def _coeff(self, i: int, j: int) -> complex:
        if self.is_rank_one:
            return complex(self.coeffs[i] * np.conj(self.coeffs[j]))
        return complex(self.coeffs[i, j])

    def _factors(self, i: int, j: int) -> np.ndarray:
        clauses = np.arange(self.N)
        return self.case_factors[clauses, self.labels[i], self.labels[j]]

    def term(self, x: int, y: int):
        """``(coeff, factors)`` for the pair (x, y), or None outside the support."""
        pos = {int(v): k for k, v in enumerate(self.support)}
        if x not in pos or y not in pos:
            return None
        i, j = pos[x], pos[y]
        return self._coeff(i, j), self._factors(i, j)

    def terms(self) -> Iterator[tuple[int, int, complex, np.ndarray]]:
        """All (x, y, coeff, factors) in ascending (x, y) order."""
        order = np.argsort(self.support)
        for i in order:
            for j in order:
                yield int(self.support[i]), int(self.support[j]), self._coeff(i, j), self._factors(i, j)

    @cached_property
    def _groups(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct labels (g, N) and each support element's group index."""
        if len(self.support) == 0:
            return np.zeros((0, self.N), np.uint8), np.zeros(0, np.int64)
        if self.N == 0:
            return np.zeros((1, 0), np.uint8), np.zeros(len(self.support), np.int64)
        unique, inverse = np.unique(self.labels, axis=0, return_inverse=True)
        return unique, inverse.ravel()

    def diagonal_weights(self) -> np.ndarray:
        """coeff(x, x) for each support element."""
        if self.is_rank_one:
            return np.abs(self.coeffs) ** 2
        return np.real(np.diag(self.coeffs))

    def pair_weights(self, tables: np.ndarray, groups=None) -> np.ndarray:
        """W[p, q] = prod_i tables[i, U[p,i], U[q,i]] over label groups."""
        unique, _ = self._groups
        if groups is not None:
            unique = unique[groups]
        W = np.ones((len(unique), len(unique)), dtype=complex)
        for i in range(self.N):
            col = unique[:, i]
            W *= tables[i][col[:, None], col[None, :]]
        return W

    def trace(self) -> float:
        tables = np.trace(self.case_factors, axis1=3, axis2=4)
        unique, inverse = self._groups
        diag = np.ones(len(unique), dtype=complex)
        for i in range(self.N):
            diag *= tables[i][unique[:, i], unique[:, i]]
        return float(np.real(np.sum(self.diagonal_weights() * diag[inverse])))


def _check_dense(total_qubits: int, limit: int):
    if total_qubits > limit:
        raise CapacityError(f"dense operator over {total_qubits} qubits exceeds limit {limit}")


def densify(joint: JointState, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Expand a factored joint state to a dense 2^(n+N) matrix."""
    n, N = joint.n, joint.N
    _check_dense(n + N, limit)
    dim_a = 1 << N
    out = np.zeros((1 << n, dim_a, 1 << n, dim_a), dtype=complex)
    unique, inverse = joint._groups
    members = [np.flatnonzero(inverse == p) for p in range(len(unique))]
    C = joint.coeff_matrix()
    clauses = np.arange(N)
    for p, rows in enumerate(members):
        for q, cols in enumerate(members):
            A = np.ones((1, 1), dtype=complex)
            for F in joint.case_factors[clauses, unique[p], unique[q]]:
                A = np.kron(A, F)
            block = C[np.ix_(rows, cols)]
            xs, ys = joint.support[rows], joint.support[cols]
            out[xs[:, None], :, ys[None, :], :] = np.einsum("xy,ab->xyab", block, A)
    return out.reshape(1 << (n + N), 1 << (n + N))


def partial_trace_ancillas(joint: JointState, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Reduced system state: entry (x,y) = coeff(x,y) * prod_i tr F_i(x,y)."""
    _check_dense(joint.n, limit)
    tables = np.trace(joint.case_factors, axis1=3, axis2=4)
    _, inverse = joint._groups
    W = joint.pair_weights(tables)[np.ix_(inverse, inverse)]
    out = np.zeros((1 << joint.n, 1 << joint.n), dtype=complex)
    out[np.ix_(joint.support, joint.support)] = joint.coeff_matrix() * W
    return out


def dense_partial_trace(rho: np.ndarray, n: int, N: int) -> np.ndarray:
    """Trace out the last ``N`` qubits of a dense (n+N)-qubit operator."""
    r = rho.reshape(1 << n, 1 << N, 1 << n, 1 << N)
    return np.einsum("xaya->xy", r)


def born_probabilities(joint: JointState, max_outcomes: int = 1 << 20) -> dict[SectorLabel, float]:
    """Probability of each ancilla readout, keyed by label, in ascending label order.

    Outcomes with exactly zero probability are omitted.
    """
    N = joint.N
    unique, inverse = joint._groups
    group_weight = np.bincount(inverse, weights=joint.diagonal_weights(), minlength=len(unique))
    diag = np.real(np.diagonal(joint.case_factors, axis1=3, axis2=4))  # (N, 2, 2, 2)
    probs: dict[SectorLabel, float] = {}
    for p, label in enumerate(unique):
        if group_weight[p] == 0:
            continue
        partial = {(): float(group_weight[p])}
        for i in range(N):
            dist = diag[i, label[i], label[i]]
            partial = {
                key + (b,): w * dist[b] for key, w in partial.items() for b in (0, 1) if dist[b] != 0
            }
            if len(partial) > max_outcomes:
                raise CapacityError(f"more than {max_outcomes} ancilla outcomes")
        for key, w in partial.items():
            probs[key] = probs.get(key, 0.0) + w
        if len(probs) > max_outcomes:
            raise CapacityError(f"more than {max_outcomes} ancilla outcomes")
    return dict(sorted((k, v) for k, v in probs.items() if v != 0))


def _rank_one_factor(T: np.ndarray, present) -> np.ndarray | None:
    """u with T[a,b] = u[a] conj(u[b]) for a, b in ``present``, else None."""
    u = np.zeros(2, dtype=complex)
    if len(present) == 1:
        (c,) = present
        u[c] = np.sqrt(max(np.real(T[c, c]), 0.0))
        return u
    t00, t11 = max(np.real(T[0, 0]), 0.0), max(np.real(T[1, 1]), 0.0)
    scale = max(t00, t11, 1e-300)
    if abs(t00 * t11 - abs(T[1, 0]) ** 2) > RANK_TOL * scale**2:
        return None
    if t00 > 0:
        u[0] = np.sqrt(t00)
        u[1] = T[1, 0] / u[0]
    else:
        u[1] = np.sqrt(t11)
    return u


def _dense_state(block: np.ndarray, support: np.ndarray, n: int):
    """Pure state if the normalized block is rank one, else the dense matrix."""
    vals, vecs = np.linalg.eigh(block)
    top = vals[-1]
    if top > 0 and (len(vals) == 1 or vals[-2] <= RANK_TOL * top):
        v = vecs[:, -1] * np.sqrt(top)
        k = np.argmax(np.abs(v))
        v = v * (abs(v[k]) / v[k])
        return PureState(n, dict(zip(support.tolist(), v))).normalized()
    _check_dense(n, DENSE_LIMIT)
    out = np.zeros((1 << n, 1 << n), dtype=complex)
    out[np.ix_(support, support)] = block
    return out


def postselect(joint: JointState, label: SectorLabel):
    """Condition on reading ``label`` from the ancillas.

    Returns ``(system_state, probability)``; the state is a normalized
    :class:`PureState` when the conditional system block has rank one and a
    dense density matrix otherwise.
    """
    label = tuple(int(b) for b in label)
    if len(label) != joint.N:
        raise ValueError(f"label has {len(label)} bits, joint state has {joint.N} ancillas")
    clauses = np.arange(joint.N)
    ell = np.asarray(label, dtype=np.int64)
    # tables[i, a, b] = <l_i| F_i(a, b) |l_i>
    tables = joint.case_factors[clauses, :, :, ell, ell] if joint.N else np.zeros((0, 2, 2), complex)
    unique, inverse = joint._groups
    diag_w = np.ones(len(unique))
    for i in range(joint.N):
        diag_w *= np.real(tables[i][unique[:, i], unique[:, i]])
    weights = joint.diagonal_weights() * diag_w[inverse]
    prob = float(np.sum(weights))
    if prob <= 0:
        raise ZeroProbabilityError(f"ancilla outcome {label} has probability zero")
    keep_groups = np.flatnonzero(diag_w > 0)
    keep = np.flatnonzero(np.isin(inverse, keep_groups) & (weights > 0))
    support = joint.support[keep]
    if joint.is_rank_one:
        sub = unique[keep_groups]
        factors = []
        for i in range(joint.N):
            u = _rank_one_factor(tables[i], sorted(set(sub[:, i].tolist())))
            if u is None:
                break
            factors.append(u)
        else:
            amp = joint.coeffs[keep].copy()
            for i, u in enumerate(factors):
                amp *= u[joint.labels[keep, i]]
            return PureState(joint.n, dict(zip(support.tolist(), amp / np.sqrt(prob)))), prob
    C = joint.coeff_matrix()[np.ix_(keep, keep)]
    remap = {g: k for k, g in enumerate(keep_groups)}
    local = np.array([remap[g] for g in inverse[keep]], dtype=np.int64)
    W = joint.pair_weights(tables, keep_groups)[np.ix_(local, local)]
    return _dense_state(C * W / prob, support, joint.n), prob


def measure_ancillas(joint: JointState, seed: int):
    """Sample an ancilla readout by the Born rule with a seeded generator.

    Returns ``(label, post_measurement_system_state, probability)``.
    """
    probs = born_probabilities(joint)
    labels = list(probs)
    p = np.array([probs[k] for k in labels])
    rng = np.random.default_rng(seed)
    label = labels[rng.choice(len(labels), p=p / p.sum())]
    state, prob = postselect(joint, label)
    return label, state, prob


# ---------------------------------------------------------------------------
# Distances


def _diff(a, b) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if a.shape[0] > 1 << DENSE_LIMIT:
        raise CapacityError("norm computation exceeds dense limit")
    return a - b


def operator_norm_distance(a, b) -> float:
    """Largest singular value of a - b."""
    return float(np.linalg.norm(_diff(a, b), 2))


def trace_norm_distance(a, b) -> float:
    """Sum of singular values of a - b (no factor 1/2)."""
    return float(np.linalg.norm(_diff(a, b), "nuc"))


def check_density(rho, tol=1e-10) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density must be a square matrix")
    if not np.allclose(rho, rho.conj().T, atol=tol):
        raise ValueError("density is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError("density does not have unit trace")
    if np.linalg.eigvalsh(rho)[0] < -1e-9:
        raise ValueError("density is not positive semidefinite")
    return rho


# ---------------------------------------------------------------------------
# State files


def state_to_json(state: PureState) -> str:
    amps = [
        {"bits": _bits_str(k, state.n), "re": float(v.real), "im": float(v.imag)}
        for k, v in state.amplitudes.items()
    ]
    return json.dumps({"n": state.n, "amplitudes": amps}, indent=2) + "\n"


def state_from_json(text: str) -> PureState:
    """Read a state file; the result is normalized."""
    try:
        data = json.loads(text)
        n = int(data["n"])
        amps = {}
        for entry in data["amplitudes"]:
            bits = entry["bits"]
            if len(bits) != n or set(bits) - {"0", "1"}:
                raise ParseError(f"bad basis string {bits!r} for n={n}")
            amps[int(bits, 2)] = amps.get(int(bits, 2), 0) + complex(entry.get("re", 0.0), entry.get("im", 0.0))
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"invalid state file: {exc}") from None
    try:
        return PureState(n, amps).normalized()
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def purify(joint: JointState, tol: float = 1e-10) -> PureState | None:
    """Write the joint state as |Phi><Phi| over n + N qubits, if it is pure.

    Requires rank-one coefficients and clause factors that factor as
    ``F_i(a, b) = v_i(a) v_i(b)^dagger`` over the clause values present.
    Returns None when no such factorization exists.
    """
    if not joint.is_rank_one:
        return None
    if joint.n + joint.N > STATE_LIMIT:
        raise CapacityError("purified state exceeds qubit limit")
    vectors = []
    for i in range(joint.N):
        present = sorted(set(joint.labels[:, i].tolist()))
        F = joint.case_factors[i]
        a0 = present[0]
        vals, vecs = np.linalg.eigh(F[a0, a0])
        if vals[0] > tol * max(vals[1], 1.0):
            return None
        v = {a0: vecs[:, 1] * np.sqrt(max(vals[1], 0.0))}
        norm2 = np.vdot(v[a0], v[a0]).real
        for b in present[1:]:
            v[b] = F[b, a0] @ v[a0] / norm2 if norm2 > 0 else np.zeros(2, complex)
        for a in present:
            for b in present:
                if not np.allclose(F[a, b], np.outer(v[a], v[b].conj()), atol=tol):
                    return None
        vectors.append(v)
    amps: dict[int, complex] = {}
    for x, a, lab in zip(joint.support.tolist(), joint.coeffs, joint.labels):
        anc = np.ones(1, dtype=complex)
        for i, v in enumerate(vectors):
            anc = np.kron(anc, v[int(lab[i])])
        for k in np.flatnonzero(np.abs(anc) >= PRUNE):
            key = (x << joint.N) | int(k)
            amps[key] = amps.get(key, 0) + a * anc[k]
    return PureState(joint.n + joint.N, amps)
