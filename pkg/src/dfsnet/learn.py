"""Learning Boolean conjunctions with a shrinking network of one-literal clauses.

The hypothesis starts as the conjunction of every literal, one ancilla per
literal.  Each positive sample is run through the network; any literal whose
ancilla reads 0 is false on that sample and is deleted.  On basis-state
samples this is the textbook elimination algorithm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .apps import sufficient_time_ancilla
from .classify import classify_passive, sector_weights
from .dynamics import NetworkConfig, evolve
from .errors import ParseError, PromiseViolation
from .formula import CnfFormula, Literal, SectorLabel, bit_matrix
from .qstate import PureState, measure_ancillas

DEFAULT_EPSILON = 1e-9


@dataclass(frozen=True)
class Hypothesis:
    n: int
    literals: frozenset[Literal]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one variable")
        bad = [lit for lit in self.literals if lit.variable > self.n]
        if bad:
            raise ValueError(f"literals {sorted(map(str, bad))} exceed n={self.n}")

    @classmethod
    def from_ints(cls, n: int, values: Iterable[int]) -> Hypothesis:
        return cls(n, frozenset(Literal.from_int(v) for v in values))

    def ordered(self) -> tuple[Literal, ...]:
        """x1, ~x1, x2, ~x2, ... restricted to the surviving literals."""
        return tuple(sorted(self.literals))

    def formula(self) -> CnfFormula:
        return CnfFormula.from_ints(self.n, [[lit.to_int()] for lit in self.ordered()])

    def network(self, gamma: float = 1.0) -> NetworkConfig:
        return NetworkConfig(self.formula(), gamma)

    def evaluate(self, x) -> int:
        return int(all(lit.value(x) for lit in self.literals))

    def truth_table(self) -> np.ndarray:
        """Conjunction value on every basis index 0 .. 2^n - 1 (x1 is the high bit)."""
        bits = bit_matrix(np.arange(1 << self.n), self.n)
        out = np.ones(1 << self.n, dtype=bool)
        for lit in self.literals:
            out &= bits[:, lit.variable - 1] != lit.negated
        return out

    def equivalent(self, other: Hypothesis) -> bool:
        if self.n != other.n:
            return False
        if self.literals == other.literals:
            return True
        return bool(np.array_equal(self.truth_table(), other.truth_table()))

    def __str__(self):
        return " & ".join(map(str, self.ordered())) or "TRUE"


@dataclass(frozen=True)
class LabeledSample:
    state: PureState
    label: int


@dataclass(frozen=True)
class StepRecord:
    step: int
    label: int
    measured_sector: SectorLabel
    literals_removed: tuple[Literal, ...]
    remaining_count: int


@dataclass
class TrainResult:
    hypothesis: Hypothesis
    update_count: int
    converged: bool
    samples_used: int
    log: list[StepRecord] = field(default_factory=list)


def init_hypothesis(n: int) -> Hypothesis:
    return Hypothesis(n, frozenset(Literal(v, neg) for v in range(1, n + 1) for neg in (False, True)))


def default_time(N: int, gamma: float = 1.0, epsilon: float = DEFAULT_EPSILON) -> float:
    return sufficient_time_ancilla(N, epsilon, gamma) if N else 0.0


def train_step(h: Hypothesis, sample: LabeledSample, t: float | None = None, seed: int = 0, gamma: float = 1.0):
    """Run one sample through the hypothesis network and prune refuted literals.

    Returns ``(new_hypothesis, measured_label, post_state)``.  Negative
    samples never change the hypothesis.  At ``t = inf`` the readout is exact,
    so a negative sample whose ancillas all read 1 contradicts the target
    being contained in the hypothesis and raises :class:`PromiseViolation`;
    at finite t the same readout may be an un-decayed ancilla and is ignored.
    """
    if sample.label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {sample.label}")
    if sample.state.n != h.n:
        raise ValueError(f"sample has {sample.state.n} qubits, hypothesis has {h.n} variables")
    literals = h.ordered()
    if not literals:
        if sample.label == 0:
            raise PromiseViolation("negative sample for an always-true hypothesis")
        return h, (), sample.state
    net = h.network(gamma)
    if t is None:
        t = default_time(net.N, gamma)
    label, post, _ = measure_ancillas(evolve(net, sample.state, t), seed)
    if sample.label == 0:
        if all(label) and np.isinf(t):
            raise PromiseViolation("negative sample satisfied every hypothesis literal")
        return h, label, post
    refuted = {lit for lit, bit in zip(literals, label) if bit == 0}
    return Hypothesis(h.n, h.literals - refuted), label, post


def train(
    n: int,
    samples: Iterable[LabeledSample],
    max_samples: int,
    t: float | None = None,
    seed: int = 0,
    gamma: float = 1.0,
    target: Hypothesis | None = None,
) -> TrainResult:
    """Consume up to ``max_samples`` samples; step k uses seed ``seed + k``.

    With a known ``target`` training stops as soon as the hypothesis is
    equivalent to it and ``converged`` reports that.  Without one,
    ``converged`` means the stream ran dry within the budget.
    """
    h = init_hypothesis(n)
    log: list[StepRecord] = []
    updates = 0
    it = iter(samples)
    used = 0
    exhausted = False
    while target is None or not h.equivalent(target):
        if used >= max_samples:
            break
        try:
            sample = next(it)
        except StopIteration:
            exhausted = True
            break
        new, label, _ = train_step(h, sample, t, seed + used, gamma)
        removed = tuple(sorted(h.literals - new.literals))
        updates += bool(removed)
        log.append(StepRecord(used, sample.label, label, removed, len(new.literals)))
        h = new
        used += 1
    if target is not None:
        converged = h.equivalent(target)
    else:
        converged = exhausted or used < max_samples
    return TrainResult(h, updates, converged, used, log)


def predict(h: Hypothesis, psi: PureState, t: float | None = None, seed: int = 0, gamma: float = 1.0):
    """Conjunction value on a state inside one hypothesis sector, without disturbing it.

    Returns ``(bit, post_state)``.
    """
    if not h.literals:
        return 1, psi
    net = h.network(gamma)
    if t is None:
        t = default_time(net.N, gamma)
    label, post = classify_passive(net, psi, t, seed)
    return int(all(label)), post


# ---------------------------------------------------------------------------
# Sample streams


def parse_target(text: str, n: int) -> Hypothesis:
    """A target file holds one line of signed variable indices, e.g. ``1 -3``."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("c")]
    if len(lines) > 1:
        raise ParseError("target file must contain a single line")
    values = []
    for tok in (lines[0].split() if lines else []):
        try:
            v = int(tok)
        except ValueError:
            raise ParseError(f"bad literal {tok!r}") from None
        if v == 0 or abs(v) > n:
            raise ParseError(f"literal {v} out of range for n={n}")
        values.append(v)
    return Hypothesis.from_ints(n, values)


def _sector_of(target: Hypothesis, indices: np.ndarray) -> np.ndarray:
    bits = bit_matrix(indices, target.n)
    lits = target.ordered()
    if not lits:
        return np.zeros((len(indices), 0), dtype=np.uint8)
    cols = [bits[:, lit.variable - 1] ^ int(lit.negated) for lit in lits]
    return np.stack(cols, axis=1).astype(np.uint8)


def superposed_sample(target: Hypothesis, x: int, rng: np.random.Generator, max_terms: int = 4) -> LabeledSample:
    """Random complex superposition of ``x`` with strings in the same target sector."""
    n = target.n
    candidates = rng.integers(0, 1 << n, size=8 * max_terms)
    ref = _sector_of(target, np.array([x]))[0]
    same = candidates[(_sector_of(target, candidates) == ref).all(axis=1)]
    support = np.unique(np.concatenate([[x], same[: max_terms - 1]]))
    amps = rng.normal(size=len(support)) + 1j * rng.normal(size=len(support))
    psi = PureState(n, dict(zip(support.tolist(), amps))).normalized()
    return LabeledSample(psi, target.evaluate(bit_matrix(np.array([x]), n)[0]))


def random_samples(
    target: Hypothesis, seed: int = 0, positive_fraction: float = 0.5, superposed_fraction: float = 0.0
) -> Iterator[LabeledSample]:
    """Endless stream of labeled samples for ``target``.

    Positives are drawn uniformly from the satisfying strings (free variables
    random, constrained ones fixed), negatives uniformly from all strings
    that falsify the target.  A ``superposed_fraction`` of the samples are
    random superpositions within the drawn string's target sector.
    """
    rng = np.random.default_rng(seed)
    n = target.n
    fixed = {lit.variable: int(not lit.negated) for lit in target.literals}
    contradictory = len(fixed) < len(target.literals)
    always_true = not target.literals
    while True:
        if rng.random() < positive_fraction and not contradictory:
            bits = rng.integers(0, 2, size=n)
            for v, b in fixed.items():
                bits[v - 1] = b
            x = int(sum(int(b) << (n - 1 - i) for i, b in enumerate(bits)))
        else:
            if always_true:
                continue
            while True:
                x = int(rng.integers(0, 1 << n))
                if not target.evaluate(bit_matrix(np.array([x]), n)[0]):
                    break
        if rng.random() < superposed_fraction:
            yield superposed_sample(target, x, rng)
        else:
            yield LabeledSample(PureState(n, {x: 1.0}), target.evaluate(bit_matrix(np.array([x]), n)[0]))


def exhaustive_positives(target: Hypothesis) -> Iterator[LabeledSample]:
    """Every satisfying basis string of ``target`` in increasing order."""
    for x in np.flatnonzero(target.truth_table()):
        yield LabeledSample(PureState(target.n, {int(x): 1.0}), 1)


def passivity_fidelity(h: Hypothesis, psi: PureState, t: float | None = None, seed: int = 0) -> float:
    """|<psi|post>|^2 after a passive prediction."""
    _, post = predict(h, psi, t, seed)
    return float(abs(psi.inner(post)) ** 2)


def in_single_sector(h: Hypothesis, psi: PureState) -> bool:
    if not h.literals:
        return True
    return len(sector_weights(psi, h.formula())) == 1

