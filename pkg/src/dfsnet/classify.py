"""Classify pure states by the decoherence-free sector they occupy."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import NetworkConfig, evolve
from .errors import PromiseViolation
from .formula import CnfFormula, SectorLabel, sector_table
from .qstate import PureState, born_probabilities, measure_ancillas


@dataclass(frozen=True)
class ClassificationResult:
    """Sector weights and the three derived classifiers.

    ``c_tilde[i]`` is the weight of sectors whose i-th clause is satisfied,
    ``c_hat_1`` the weight of the all-ones sector, ``c_hat_2`` the product
    of the ``c_tilde`` entries.  ``stderr`` is filled by sampled estimates
    only and maps field names (and sector labels) to standard errors.
    """

    sector_weights: dict[SectorLabel, float]
    c_tilde: tuple[float, ...]
    c_hat_1: float
    c_hat_2: float
    shots: int | None = None
    stderr: dict = field(default_factory=dict)

    @classmethod
    def from_weights(cls, weights: dict[SectorLabel, float], N: int, **kwargs) -> ClassificationResult:
        weights = dict(sorted(weights.items()))
        c_tilde = tuple(
            float(sum(w for label, w in weights.items() if label[i] == 1)) for i in range(N)
        )
        c_hat_1 = float(weights.get((1,) * N, 0.0))
        c_hat_2 = float(np.prod(c_tilde)) if N else 1.0
        return cls(weights, c_tilde, c_hat_1, c_hat_2, **kwargs)

    def is_vertex(self, tol=1e-12) -> bool:
        return all(min(c, 1 - c) <= tol for c in self.c_tilde)


def _check_state(psi: PureState, formula: CnfFormula):
    if psi.n != formula.variable_count:
        raise ValueError(f"state has {psi.n} qubits, formula has {formula.variable_count} variables")
    if not psi.is_normalized():
        raise ValueError("state is not normalized")


def sector_weights(psi: PureState, formula: CnfFormula) -> dict[SectorLabel, float]:
    """||Pi_C psi||^2 for every sector C touched by the state's support."""
    _check_state(psi, formula)
    labels = sector_table(formula, psi.support)
    probs = np.abs(psi.values) ** 2
    weights: dict[SectorLabel, float] = {}
    for row, p in zip(labels, probs):
        key = tuple(int(b) for b in row)
        weights[key] = weights.get(key, 0.0) + float(p)
    return dict(sorted(weights.items()))


def classify_exact(psi: PureState, formula: CnfFormula) -> ClassificationResult:
    return ClassificationResult.from_weights(sector_weights(psi, formula), formula.num_clauses)


def is_dfs_member(psi: PureState, formula: CnfFormula, label: SectorLabel) -> bool:
    """True iff every basis string in the support of psi has sector ``label``."""
    _check_state(psi, formula)
    labels = sector_table(formula, psi.support)
    return bool((labels == np.asarray(label, dtype=np.uint8)).all())


def single_sector(psi: PureState, formula: CnfFormula) -> SectorLabel | None:
    """The unique sector containing psi, or None if it straddles sectors."""
    weights = sector_weights(psi, formula)
    return next(iter(weights)) if len(weights) == 1 else None


def classify_sampled(net: NetworkConfig, psi: PureState, t: float, shots: int, seed: int) -> ClassificationResult:
    """Estimate sector weights from ``shots`` ancilla readouts after evolving for ``t``.

    Every shot is an independent run of the network on a fresh copy of psi,
    so the readouts are i.i.d. draws from the Born distribution of the
    evolved state; they are drawn in one batch from a seeded generator.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    _check_state(psi, net.formula)
    probs = born_probabilities(evolve(net, psi, t))
    labels = list(probs)
    p = np.array([probs[k] for k in labels])
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, p / p.sum())
    weights = {label: c / shots for label, c in zip(labels, counts) if c}
    result = ClassificationResult.from_weights(weights, net.N, shots=shots)

    def binomial(q):
        return float(np.sqrt(q * (1 - q) / shots))

    stderr: dict = {label: binomial(w) for label, w in result.sector_weights.items()}
    stderr["c_tilde"] = tuple(binomial(q) for q in result.c_tilde)
    stderr["c_hat_1"] = binomial(result.c_hat_1)
    # delta method for the product of c_tilde entries under multinomial noise
    ct = np.array(result.c_tilde)
    w = np.array(list(result.sector_weights.values()))
    grad = np.array([
        sum(np.prod(np.delete(ct, i)) for i in range(net.N) if label[i] == 1)
        for label in result.sector_weights
    ])
    var = (np.sum(w * grad**2) - np.sum(w * grad) ** 2) / shots if len(w) else 0.0
    stderr["c_hat_2"] = float(np.sqrt(max(var, 0.0)))
    return replace(result, stderr=stderr)


def classify_passive(net: NetworkConfig, psi: PureState, t: float, seed: int) -> tuple[SectorLabel, PureState]:
    """Read the sector of a state promised to lie in a single sector.

    Only the ancillas are measured; for a state inside one sector the
    returned system state equals the input.
    """
    _check_state(psi, net.formula)
    weights = sector_weights(psi, net.formula)
    if len(weights) != 1:
        raise PromiseViolation(
            f"state spans {len(weights)} sectors {sorted(weights)}; passive readout would disturb it"
        )
    label, state, _ = measure_ancillas(evolve(net, psi, t), seed)
    return label, state
