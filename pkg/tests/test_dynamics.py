import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import kron_all
from dfsnet.apps import BELL_FORMULA, PLUS_PLUS
from dfsnet.dynamics import (
    PLUS,
    Mode,
    NetworkConfig,
    case_factors,
    clause_channel_pac,
    clause_channel_standard,
    clause_factor_standard,
    dephasing_equivalent,
    evolve,
    evolve_density,
    fixed_point_projection,
    pac_fixed_point,
    pac_generator,
    proj,
    sector_projectors,
    standard_generator,
)
from dfsnet.formula import CnfFormula, Kind, random_cnf, sector_table
from dfsnet.qstate import (
    PureState,
    born_probabilities,
    densify,
    fidelity,
    partial_trace_ancillas,
    purify,
    random_state,
    trace_norm_distance,
)

SM = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|
SP = SM.T.copy()
CASES = [(0, 0), (0, 1), (1, 0), (1, 1)]


def effective_ops(c, mode, kind):
    """Ancilla operator the jump applies on a system string with clause value c."""
    if mode == "pac":
        return SM if c == 0 else SP
    if kind == "cnf":
        return SM if c == 0 else np.zeros((2, 2))
    return SP if c == 1 else np.zeros((2, 2))


def reference_generator(c_x, c_y, gamma, mode, kind):
    """l_x A l_y^+ - 1/2 l_x^+ l_x A - 1/2 A l_y^+ l_y on row-major vec(A), from matrices."""
    lx, ly = effective_ops(c_x, mode, kind), effective_ops(c_y, mode, kind)
    I = np.eye(2)
    # row-major vec: vec(M A N) = (M kron N^T) vec(A)
    G = np.kron(lx, ly.conj()) - 0.5 * np.kron(lx.conj().T @ lx, I) - 0.5 * np.kron(I, (ly.conj().T @ ly).T)
    return gamma * G


@pytest.mark.parametrize("kind", ["cnf", "dnf"])
@pytest.mark.parametrize("case", CASES)
def test_standard_generator_matches_matrix_form(case, kind):
    G = standard_generator(*case, 1.3, Kind(kind))
    assert np.allclose(G, reference_generator(*case, 1.3, "standard", kind), atol=1e-15)


@pytest.mark.parametrize("case", CASES)
def test_pac_generator_matches_matrix_form(case):
    assert np.allclose(pac_generator(*case, 0.7), reference_generator(*case, 0.7, "pac", "cnf"), atol=1e-15)


@pytest.mark.parametrize("t", [0.0, 0.1, 1.0, 5.0])
@pytest.mark.parametrize("case", CASES)
def test_channels_equal_generator_exponential(case, t, rng):
    A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    for kind in (Kind.CNF, Kind.DNF):
        E = scipy.linalg.expm(t * standard_generator(*case, 0.9, kind))
        got = clause_channel_standard(*case, 0.9, t, A, kind)
        assert np.allclose(got.ravel(), E @ A.ravel(), atol=1e-13)
    E = scipy.linalg.expm(t * pac_generator(*case, 0.9))
    assert np.allclose(clause_channel_pac(*case, 0.9, t, A).ravel(), E @ A.ravel(), atol=1e-13)


@pytest.mark.parametrize("case", CASES)
def test_infinite_time_is_limit(case):
    for kind in (Kind.CNF, Kind.DNF):
        far = clause_factor_standard(*case, 1.0, 60.0, kind)
        assert np.allclose(clause_factor_standard(*case, 1.0, math.inf, kind), far, atol=1e-12)
    assert np.allclose(clause_channel_pac(*case, 1.0, math.inf), clause_channel_pac(*case, 1.0, 80.0), atol=1e-12)


def test_standard_factor_examples():
    one = proj(1)
    for t in (0.0, 0.3, 7.0, math.inf):
        assert np.array_equal(clause_factor_standard(1, 1, 2.0, t), one)
    assert np.array_equal(clause_factor_standard(0, 0, 1.0, 0.0), one)
    assert np.allclose(clause_factor_standard(0, 1, 1.0, 2 * math.log(2)), 0.5 * one, atol=1e-15)
    assert np.array_equal(clause_factor_standard(0, 0, 1.0, math.inf), proj(0))
    assert np.array_equal(clause_factor_standard(0, 1, 1.0, math.inf), np.zeros((2, 2)))
    d = math.exp(-0.8)
    assert np.allclose(clause_factor_standard(0, 0, 0.4, 2.0), d * one + (1 - d) * proj(0))
    with pytest.raises(ValueError):
        clause_factor_standard(0, 0, 1.0, -1.0)


def test_standard_factor_equals_channel_on_resting_level():
    for case in CASES:
        for t in (0.0, 0.5, 3.0, math.inf):
            assert np.allclose(clause_factor_standard(*case, 1.1, t), clause_channel_standard(*case, 1.1, t, proj(1)))
            assert np.allclose(
                clause_factor_standard(*case, 1.1, t, Kind.DNF), clause_channel_standard(*case, 1.1, t, proj(0), Kind.DNF)
            )


def test_pac_factor_examples():
    assert np.allclose(clause_channel_pac(0, 0, 1.0, math.inf), proj(0))
    expected = np.zeros((2, 2))
    expected[0, 1] = 1
    assert np.allclose(clause_channel_pac(0, 1, 1.0, math.inf), expected)
    for case in CASES:
        assert np.allclose(clause_channel_pac(*case, 1.0, 0.0), PLUS)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(CASES), st.floats(0, 5), st.floats(0, 5), st.floats(0.1, 3), st.sampled_from(["standard", "pac"]))
def test_semigroup(case, t1, t2, gamma, mode):
    A = np.array([[0.3, 0.2 - 0.1j], [0.2 + 0.1j, 0.7]])
    channel = clause_channel_pac if mode == "pac" else clause_channel_standard
    once = channel(*case, gamma, t1 + t2, A)
    twice = channel(*case, gamma, t2, channel(*case, gamma, t1, A))
    assert np.allclose(once, twice, atol=1e-12)


# --- whole-network evolution --------------------------------------------------


def test_classical_input_reaches_label():
    f = CnfFormula.from_ints(3, [[1, -2, 3], [2], [-1, -3]])
    net = NetworkConfig(f)
    for x in range(8):
        joint = evolve(net, PureState(3, {x: 1.0}), math.inf)
        label = tuple(int(b) for b in sector_table(f, np.array([x]))[0])
        assert born_probabilities(joint) == {label: pytest.approx(1.0)}


def test_bell_weights():
    probs = born_probabilities(evolve(NetworkConfig(BELL_FORMULA), PLUS_PLUS, math.inf))
    assert [probs.get(k, 0) for k in [(0, 0), (0, 1), (1, 0), (1, 1)]] == pytest.approx([0, 0.25, 0.25, 0.5], abs=1e-15)


def test_time_zero_is_identity(rng):
    for mode in Mode:
        net = NetworkConfig(random_cnf(3, 2, rng), 1.0, mode)
        psi = random_state(3, rng)
        rho = densify(evolve(net, psi, 0.0))
        expected = kron_all([psi.density()] + [net.ancilla_initial()] * net.N)
        assert np.allclose(rho, expected, atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(list(Mode)), st.sampled_from(list(Kind)),
       st.sampled_from([0.0, 0.3, 1.0, 4.0, math.inf]))
def test_trace_preserved(seed, mode, kind, t):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    net = NetworkConfig(random_cnf(n, int(rng.integers(1, 6)), rng, kind=kind), 1.0, mode)
    assert evolve(net, random_state(n, rng), t).trace() == pytest.approx(1.0, abs=1e-10)


def test_evolve_rejects_bad_input():
    net = NetworkConfig(BELL_FORMULA)
    with pytest.raises(ValueError):
        evolve(net, PureState.basis("0"), 1.0)
    with pytest.raises(ValueError):
        evolve(net, PureState(2, {0: 2.0}), 1.0)


def test_network_config_validation():
    with pytest.raises(ValueError):
        NetworkConfig(BELL_FORMULA, gamma=0.0)
    with pytest.raises(ValueError):
        NetworkConfig(CnfFormula.from_ints(4, [[1, 2, 3, 4]]))
    with pytest.raises(ValueError):
        NetworkConfig(CnfFormula.from_ints(2, [[1, 1]]))


def test_evolve_density_consistency(rng):
    net = NetworkConfig(random_cnf(3, 3, rng))
    psi = PureState(3, {5: 1.0})
    a = densify(evolve(net, psi, 0.8))
    b = densify(evolve_density(net, psi.density(), 0.8))
    assert np.allclose(a, b)


def test_maximally_mixed_fixed_point(rng):
    f = random_cnf(3, 2, rng)
    rho = np.eye(8) / 8
    got = densify(evolve_density(NetworkConfig(f), rho, math.inf))
    assert np.allclose(got, fixed_point_projection(f, rho), atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(list(Kind)))
def test_infinite_time_matches_fixed_point_projection(seed, kind):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    f = random_cnf(n, int(rng.integers(1, 4)), rng, kind=kind)
    psi = random_state(n, rng)
    got = densify(evolve(NetworkConfig(f), psi, math.inf))
    assert np.allclose(got, fixed_point_projection(f, psi.density()), atol=1e-12)
    reduced = partial_trace_ancillas(evolve(NetworkConfig(f), psi, math.inf))
    assert np.allclose(reduced, dephasing_equivalent(f, psi.density()), atol=1e-12)


def test_projectors_resolve_identity(rng):
    f = random_cnf(4, 3, rng)
    Ps = sector_projectors(f)
    assert np.array_equal(sum(Ps.values()), np.eye(16))
    for P in Ps.values():
        assert np.array_equal(P @ P, P)


def test_dfs_state_unchanged_for_all_t():
    psi = PureState(2, {0: 0.6, 3: 0.8j})  # both strings in sector (1, 1)
    net = NetworkConfig(BELL_FORMULA)
    for t in (0.1, 1.0, 10.0, math.inf):
        reduced = partial_trace_ancillas(evolve(net, psi, t))
        assert np.array_equal(reduced, psi.density())
    expected = np.kron(psi.density(), np.kron(proj(1), proj(1)))
    assert np.allclose(fixed_point_projection(BELL_FORMULA, psi.density()), expected)


def test_dephasing_examples():
    f = CnfFormula.from_ints(1, [[1]])
    x = np.diag([0, 1]).astype(complex)
    assert np.array_equal(dephasing_equivalent(f, x), x)
    coh = np.array([[0, 1], [0, 0]], dtype=complex)
    assert np.array_equal(dephasing_equivalent(f, coh), np.zeros((2, 2)))


def test_monotone_approach(rng):
    f = random_cnf(3, 3, rng)
    for mode in Mode:
        net = NetworkConfig(f, 1.0, mode)
        psi = random_state(3, rng)
        limit = densify(evolve(net, psi, math.inf))
        d = [trace_norm_distance(densify(evolve(net, psi, t)), limit) for t in np.linspace(0, 8, 17)]
        assert all(b <= a + 1e-12 for a, b in zip(d, d[1:]))


def test_pac_fixed_point_is_pure(rng):
    for _ in range(10):
        n = int(rng.integers(1, 4))
        f = random_cnf(n, int(rng.integers(1, 4)), rng)
        psi = random_state(n, rng)
        pure = purify(evolve(NetworkConfig(f, mode=Mode.PAC), psi, math.inf))
        assert fidelity(pac_fixed_point(f, psi), pure) == pytest.approx(1.0, abs=1e-12)


def test_case_factor_table_shape():
    net = NetworkConfig(BELL_FORMULA)
    assert case_factors(net, 1.0).shape == (2, 2, 2, 2, 2)
