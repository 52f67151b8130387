import math

import numpy as np
import pytest

from dfsnet.errors import ParseError, PromiseViolation
from dfsnet.learn import (
    Hypothesis,
    LabeledSample,
    default_time,
    exhaustive_positives,
    in_single_sector,
    init_hypothesis,
    parse_target,
    passivity_fidelity,
    predict,
    random_samples,
    superposed_sample,
    train,
    train_step,
)
from dfsnet.qstate import PureState


def basis(n, bits):
    return LabeledSample(PureState.basis(bits), 1)


def textbook_elimination(n, xs):
    """Classical conjunction learner on bit strings."""
    lits = {(v, neg) for v in range(1, n + 1) for neg in (False, True)}
    for x in xs:
        lits = {(v, neg) for v, neg in lits if (x[v - 1] == "1") != neg}
    return lits


def test_init_sizes():
    for n in (1, 3, 8):
        h = init_hypothesis(n)
        assert len(h.literals) == 2 * n
        assert h.network().N == 2 * n
        assert not h.truth_table().any()


def test_recovers_two_literal_target():
    target = Hypothesis.from_ints(5, [1, -3])
    result = train(5, exhaustive_positives(target), 100, target=target)
    assert result.converged
    assert result.hypothesis.literals == target.literals
    assert result.update_count <= 2 * 5
    assert str(result.hypothesis) == "x1 & ~x3"


def test_negative_sample_leaves_hypothesis():
    h = Hypothesis.from_ints(3, [1, 2, -3])
    new, label, _ = train_step(h, LabeledSample(PureState.basis("011"), 0))
    assert new == h
    assert 0 in label


def test_negative_sample_satisfying_everything_violates_promise():
    h = Hypothesis.from_ints(3, [1])
    with pytest.raises(PromiseViolation):
        train_step(h, LabeledSample(PureState.basis("100"), 0), t=math.inf)
    # at finite t an all-ones readout may be an un-decayed ancilla
    assert train_step(h, LabeledSample(PureState.basis("100"), 0), t=0.01)[0] == h
    with pytest.raises(PromiseViolation):
        train_step(Hypothesis(3, frozenset()), LabeledSample(PureState.basis("000"), 0))


def test_basis_trajectory_is_classical_elimination(rng):
    n = 4
    xs = ["".join(rng.choice(["0", "1"], size=n)) for _ in range(6)]
    h = init_hypothesis(n)
    for k, x in enumerate(xs):
        h, _, _ = train_step(h, basis(n, x), seed=k)
        expected = textbook_elimination(n, xs[: k + 1])
        assert {(lit.variable, lit.negated) for lit in h.literals} == expected


def test_short_time_never_drops_target_literals():
    # a true literal's ancilla starts in |1> and stays there, so short
    # evolution only slows pruning down
    target = Hypothesis.from_ints(4, [2, -3])
    result = train(4, random_samples(target, seed=3), 400, t=0.3, target=target)
    assert target.literals <= result.hypothesis.literals
    assert result.converged
    slow = result.samples_used
    fast = train(4, random_samples(target, seed=3), 400, target=target).samples_used
    assert fast <= slow


def test_empty_target():
    target = Hypothesis(3, frozenset())
    result = train(3, random_samples(target, seed=1), 200, target=target)
    assert result.converged
    assert str(result.hypothesis) == "TRUE"


def test_budget_too_small():
    target = Hypothesis.from_ints(5, [1, -3])
    result = train(5, random_samples(target, seed=0), 1, target=target)
    assert not result.converged
    assert result.samples_used == 1


def test_stream_exhausted_without_target():
    target = Hypothesis.from_ints(3, [2])
    result = train(3, exhaustive_positives(target), 100)
    assert result.converged and result.samples_used == 4
    assert result.hypothesis.equivalent(target)


def test_training_deterministic():
    target = Hypothesis.from_ints(6, [1, -4, 6])
    a = train(6, random_samples(target, seed=9, superposed_fraction=0.5), 300, seed=4, target=target)
    b = train(6, random_samples(target, seed=9, superposed_fraction=0.5), 300, seed=4, target=target)
    assert a.log == b.log and a.hypothesis == b.hypothesis


def test_superposed_training_recovers(rng):
    for _ in range(5):
        n = int(rng.integers(2, 7))
        vs = rng.choice(np.arange(1, n + 1), size=int(rng.integers(0, n + 1)), replace=False)
        target = Hypothesis.from_ints(n, [int(v) * int(rng.choice([-1, 1])) for v in vs])
        stream = random_samples(target, seed=int(rng.integers(1 << 30)), superposed_fraction=0.5)
        result = train(n, stream, 500, target=target)
        assert result.converged and result.update_count <= 2 * n


def test_superposed_sample_stays_in_sector(rng):
    target = Hypothesis.from_ints(5, [1, -3])
    for x in range(32):
        s = superposed_sample(target, x, rng)
        assert in_single_sector(target, s.state)
        assert s.label == target.evaluate(format(x, "05b"))
        assert s.state.norm() == pytest.approx(1.0)


def test_predict_examples():
    h = Hypothesis.from_ints(5, [1, -3])
    psi = PureState.from_bits(5, {"10010": 1 / math.sqrt(2), "10001": 1 / math.sqrt(2)})
    bit, post = predict(h, psi)
    assert bit == 1
    assert abs(psi.inner(post)) ** 2 == pytest.approx(1.0, abs=1e-12)
    assert predict(h, PureState.basis("10100"))[0] == 0
    assert predict(Hypothesis(5, frozenset()), PureState.basis("00000"))[0] == 1


def test_passivity_on_sector_states(rng):
    h = Hypothesis.from_ints(4, [2, -4])
    for _ in range(5):
        x = int(rng.integers(16))
        psi = superposed_sample(h, x, rng).state
        assert passivity_fidelity(h, psi) >= 1 - 1e-9


def test_default_time():
    assert default_time(0) == 0.0
    t = default_time(6)
    assert 6 * math.log1p(-math.exp(-t)) >= math.log1p(-1e-9)


def test_parse_target():
    h = parse_target("c comment\n1 -3\n", 5)
    assert h == Hypothesis.from_ints(5, [1, -3])
    assert parse_target("", 3).literals == frozenset()
    for bad in ("1 x", "0", "7", "1\n2"):
        with pytest.raises(ParseError):
            parse_target(bad, 5)


def test_hypothesis_equivalence():
    a = Hypothesis.from_ints(2, [1, -1])
    b = Hypothesis.from_ints(2, [2, -2, 1])
    assert a.equivalent(b)
    assert not a.equivalent(Hypothesis.from_ints(2, [1]))
    with pytest.raises(ValueError):
        Hypothesis.from_ints(2, [3])
