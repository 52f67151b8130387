import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfsnet.apps import BELL_FORMULA, PLUS_PLUS, PSI_PLUS
from dfsnet.dynamics import Mode, NetworkConfig, evolve, evolve_density
from dfsnet.errors import CapacityError, ParseError, ZeroProbabilityError
from dfsnet.formula import Kind, random_cnf
from dfsnet.qstate import (
    JointState,
    PureState,
    born_probabilities,
    check_density,
    dense_partial_trace,
    densify,
    fidelity,
    measure_ancillas,
    operator_norm_distance,
    partial_trace_ancillas,
    postselect,
    purify,
    random_state,
    state_from_json,
    state_to_json,
    trace_norm_distance,
    uniform_superposition,
)


def random_joint(seed, mixed=False):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    N = int(rng.integers(1, 4))
    mode = Mode.PAC if rng.random() < 0.3 else Mode.STANDARD
    kind = Kind.DNF if rng.random() < 0.3 else Kind.CNF
    net = NetworkConfig(random_cnf(n, N, rng, kind=kind), float(rng.uniform(0.3, 2)), mode)
    t = float(rng.choice([0.0, 0.2, 1.0, 3.0, math.inf]))
    if mixed:
        G = rng.normal(size=(1 << n, 1 << n)) + 1j * rng.normal(size=(1 << n, 1 << n))
        rho = G @ G.conj().T
        return net, evolve_density(net, rho / np.trace(rho), t)
    return net, evolve(net, random_state(n, rng), t)


def label_projector(n, N, label):
    a = int("".join(map(str, label)), 2)
    P = np.zeros((1 << N, 1 << N))
    P[a, a] = 1
    return np.kron(np.eye(1 << n), P)


# --- pure states --------------------------------------------------------------


def test_uniform_superposition():
    s = uniform_superposition(1)
    assert s.amplitudes == {0: pytest.approx(2**-0.5), 1: pytest.approx(2**-0.5)}
    s2 = uniform_superposition(2)
    assert np.allclose(s2.values, 0.5)
    assert s2.norm() == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(CapacityError):
        uniform_superposition(25)


def test_prune_and_basis():
    s = PureState(2, {0: 1.0, 3: 1e-16})
    assert list(s.amplitudes) == [0]
    assert PureState.basis("10").amplitudes == {2: 1}
    with pytest.raises(ValueError):
        PureState(2, {4: 1.0})


def test_normalize_and_fidelity(rng):
    s = PureState(2, {0: 3.0, 3: 4j}).normalized()
    assert s.is_normalized()
    assert fidelity(s, s) == pytest.approx(1.0)
    assert fidelity(s, s.density()) == pytest.approx(1.0)
    assert fidelity(PureState.basis("00"), PureState.basis("11")) == 0


def test_state_json_roundtrip(rng):
    s = random_state(3, rng, support_size=5)
    back = state_from_json(state_to_json(s))
    assert back.n == 3
    assert np.allclose(back.vector(), s.vector(), atol=1e-15)
    bits = [a["bits"] for a in json.loads(state_to_json(s))["amplitudes"]]
    assert bits == sorted(bits)


def test_state_json_normalizes_and_rejects():
    s = state_from_json('{"n": 1, "amplitudes": [{"bits": "0", "re": 2}, {"bits": "1", "im": 2}]}')
    assert s.vector() == pytest.approx(np.array([1, 1j]) / math.sqrt(2))
    for bad in ["not json", '{"n": 2, "amplitudes": [{"bits": "0", "re": 1}]}',
                '{"n": 1, "amplitudes": []}', '{"amplitudes": []}']:
        with pytest.raises(ParseError):
            state_from_json(bad)


# --- joint states -------------------------------------------------------------


def test_densify_product_state():
    net = NetworkConfig(BELL_FORMULA)
    joint = evolve(net, PureState.basis("01"), 0.0)
    rho = densify(joint)
    expected = np.zeros((16, 16))
    k = (0b01 << 2) | 0b11
    expected[k, k] = 1
    assert np.array_equal(rho, expected)


def test_joint_rejects_non_hermitian_factors():
    factors = np.zeros((1, 2, 2, 2, 2), dtype=complex)
    factors[0, 0, 1] = [[0, 1], [0, 0]]
    with pytest.raises(ValueError):
        JointState(1, [0, 1], [[0], [1]], [0.6, 0.8], factors)


def test_densify_capacity():
    net = NetworkConfig(random_cnf(8, 5, np.random.default_rng(0)))
    with pytest.raises(CapacityError):
        densify(evolve(net, uniform_superposition(8), 1.0))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_densify_invariants(seed, mixed):
    net, joint = random_joint(seed, mixed)
    rho = densify(joint)
    assert np.allclose(rho, rho.conj().T, atol=1e-12)
    assert np.trace(rho).real == pytest.approx(joint.trace(), abs=1e-10)
    assert joint.trace() == pytest.approx(1.0, abs=1e-10)
    assert np.linalg.eigvalsh(rho)[0] > -1e-9
    reduced = partial_trace_ancillas(joint)
    assert np.allclose(reduced, dense_partial_trace(rho, joint.n, joint.N), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_born_probabilities_match_dense_projectors(seed, mixed):
    net, joint = random_joint(seed, mixed)
    probs = born_probabilities(joint)
    assert sum(probs.values()) == pytest.approx(1.0, abs=1e-10)
    assert list(probs) == sorted(probs)
    rho = densify(joint)
    for a in range(1 << joint.N):
        label = tuple(int(b) for b in format(a, f"0{joint.N}b"))
        p = np.trace(label_projector(joint.n, joint.N, label) @ rho).real
        assert probs.get(label, 0.0) == pytest.approx(p, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_postselect_matches_dense(seed, mixed):
    net, joint = random_joint(seed, mixed)
    for label, p in born_probabilities(joint).items():
        if p < 1e-9:
            continue
        state, prob = postselect(joint, label)
        P = label_projector(joint.n, joint.N, label)
        block = dense_partial_trace(P @ densify(joint) @ P, joint.n, joint.N)
        assert prob == pytest.approx(p, abs=1e-12)
        dense = state.density() if isinstance(state, PureState) else state
        assert np.allclose(dense, block / np.trace(block).real, atol=1e-9)
        if isinstance(state, PureState):
            assert state.is_normalized()


def test_bell_born_probabilities_and_states():
    joint = evolve(NetworkConfig(BELL_FORMULA), PLUS_PLUS, math.inf)
    probs = born_probabilities(joint)
    assert probs == {(0, 1): pytest.approx(0.25), (1, 0): pytest.approx(0.25), (1, 1): pytest.approx(0.5)}
    state, p = postselect(joint, (1, 1))
    assert fidelity(PSI_PLUS, state) == pytest.approx(1.0, abs=1e-14)
    state, _ = postselect(joint, (0, 1))
    assert fidelity(PureState.basis("01"), state) == pytest.approx(1.0)
    with pytest.raises(ZeroProbabilityError):
        postselect(joint, (0, 0))


def test_initial_readout_is_resting_level():
    joint = evolve(NetworkConfig(BELL_FORMULA), PLUS_PLUS, 0.0)
    assert born_probabilities(joint) == {(1, 1): pytest.approx(1.0)}


def test_measure_in_single_sector_keeps_state(rng):
    psi = PureState(2, {0: 0.6, 3: 0.8j})
    label, post, p = measure_ancillas(evolve(NetworkConfig(BELL_FORMULA), psi, 2.0), seed=4)
    assert label == (1, 1) and p == pytest.approx(1.0)
    assert fidelity(psi, post) == pytest.approx(1.0, abs=1e-12)


def test_measure_is_deterministic_and_born_distributed():
    joint = evolve(NetworkConfig(BELL_FORMULA), PLUS_PLUS, math.inf)
    assert measure_ancillas(joint, 7)[0] == measure_ancillas(joint, 7)[0]
    shots = 4000
    counts = {}
    for s in range(shots):
        label = measure_ancillas(joint, s)[0]
        counts[label] = counts.get(label, 0) + 1
    for label, p in born_probabilities(joint).items():
        sigma = math.sqrt(p * (1 - p) / shots)
        assert abs(counts.get(label, 0) / shots - p) <= 4 * sigma


def test_purify_pac_and_mixed():
    net = NetworkConfig(BELL_FORMULA, mode=Mode.PAC)
    pure = purify(evolve(net, PLUS_PLUS, math.inf))
    assert pure is not None and pure.n == 4 and pure.is_normalized()
    assert purify(evolve(net, PLUS_PLUS, 0.7)) is None


# --- norms ----------------------------------------------------------------------


def test_norm_examples():
    a = PureState.basis("0").density()
    b = PureState.basis("1").density()
    assert operator_norm_distance(a, a) == 0
    assert operator_norm_distance(a, b) == pytest.approx(1.0)
    assert trace_norm_distance(a, b) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        trace_norm_distance(a, np.eye(4))


def test_operator_norm_below_trace_norm(rng):
    for _ in range(20):
        a = random_state(3, rng).density()
        b = random_state(3, rng).density()
        op, tr = operator_norm_distance(a, b), trace_norm_distance(a, b)
        assert op <= tr + 1e-12
        assert op == pytest.approx(operator_norm_distance(b, a))


def test_check_density():
    check_density(np.eye(2) / 2)
    with pytest.raises(ValueError):
        check_density(np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        check_density(np.eye(2))
