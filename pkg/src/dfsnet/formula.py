"""CNF/DNF formulas: data model, DIMACS I/O, 3-CNF conversion and sector partitions.

Variables are 1-based. An assignment is a tuple of bits ``(x1, ..., xn)``; a
sector label is the tuple of clause evaluations ``(C1(x), ..., CN(x))``.
Basis index convention: ``x1`` is the most significant bit.
"""

from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, ParseError

logger = logging.getLogger(__name__)

Assignment = tuple[int, ...]
SectorLabel = tuple[int, ...]

BRUTE_FORCE_LIMIT = 20


class Kind(enum.Enum):
    CNF = "cnf"  # clauses are disjunctions, formula is their conjunction
    DNF = "dnf"  # clauses are conjunctions, formula is their disjunction


@dataclass(frozen=True, order=True)
class Literal:
    variable: int
    negated: bool = False

    def __post_init__(self):
        if self.variable < 1:
            raise ValueError(f"variable index must be >= 1, got {self.variable}")

    @classmethod
    def from_int(cls, value: int) -> Literal:
        if value == 0:
            raise ValueError("0 is not a literal")
        return cls(abs(value), value < 0)

    def to_int(self) -> int:
        return -self.variable if self.negated else self.variable

    def __neg__(self) -> Literal:
        return Literal(self.variable, not self.negated)

    def value(self, x: Sequence[int]) -> int:
        return int(x[self.variable - 1]) ^ int(self.negated)

    def __str__(self):
        return ("~x" if self.negated else "x") + str(self.variable)


@dataclass(frozen=True)
class Clause:
    literals: tuple[Literal, ...]
    kind: Kind = Kind.CNF

    def __post_init__(self):
        object.__setattr__(self, "literals", tuple(self.literals))
        if not self.literals:
            raise ValueError("empty clause")

    @classmethod
    def from_ints(cls, values: Iterable[int], kind: Kind = Kind.CNF) -> Clause:
        return cls(tuple(Literal.from_int(v) for v in values), kind)

    @property
    def variables(self) -> tuple[int, ...]:
        return tuple(lit.variable for lit in self.literals)

    def __len__(self):
        return len(self.literals)

    def evaluate(self, x: Sequence[int]) -> int:
        values = (lit.value(x) for lit in self.literals)
        return int(any(values)) if self.kind is Kind.CNF else int(all(values))

    def jump_pattern(self) -> dict[int, int]:
        """Variable values singled out by the clause's jump-operator projector.

        For a CNF clause this is the unique pattern making every literal false;
        for a DNF clause the unique pattern making every literal true.
        """
        target = 0 if self.kind is Kind.CNF else 1
        return {lit.variable: target ^ int(lit.negated) for lit in self.literals}

    def __str__(self):
        op = " | " if self.kind is Kind.CNF else " & "
        return "(" + op.join(map(str, self.literals)) + ")"


class _Trivial:
    """Marker for a clause whose value does not depend on the assignment."""

    def __init__(self, name: str, value: int):
        self.name = name
        self.value = value

    def __repr__(self):
        return self.name


TAUTOLOGY = _Trivial("Tautology", 1)
CONTRADICTION = _Trivial("Contradiction", 0)


@dataclass(frozen=True)
class CnfFormula:
    """A uniform-kind list of clauses over ``variable_count`` variables.

    Despite the name this also carries DNF formulas (``kind=Kind.DNF``); the
    dissipative construction treats both identically up to the ancilla
    convention.  An empty clause list is allowed and evaluates to the
    identity of the outer connective (True for CNF, False for DNF).
    """

    variable_count: int
    clauses: tuple[Clause, ...] = ()
    kind: Kind = Kind.CNF

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(self.clauses))
        if self.variable_count < 1:
            raise ValueError("a formula needs at least one variable")
        for clause in self.clauses:
            if clause.kind is not self.kind:
                raise ValueError("all clauses must share the formula's kind")
            for lit in clause.literals:
                if lit.variable > self.variable_count:
                    raise ValueError(
                        f"literal {lit} exceeds variable count {self.variable_count}"
                    )

    @classmethod
    def from_ints(cls, n: int, clauses: Iterable[Iterable[int]], kind: Kind = Kind.CNF):
        return cls(n, tuple(Clause.from_ints(c, kind) for c in clauses), kind)

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def evaluate(self, x: Sequence[int]) -> int:
        return eval_formula(self, x)

    def sector(self, x: Sequence[int]) -> SectorLabel:
        return eval_sector(self, x)

    def to_ints(self) -> list[list[int]]:
        return [[lit.to_int() for lit in c.literals] for c in self.clauses]

    def __str__(self):
        op = " & " if self.kind is Kind.CNF else " | "
        return op.join(map(str, self.clauses)) or ("True" if self.kind is Kind.CNF else "False")


# ---------------------------------------------------------------------------
# DIMACS


def parse_dimacs(text: str) -> CnfFormula:
    """Parse DIMACS CNF text.

    Clauses may span lines and must be 0-terminated.  A ``p dnf`` header is
    accepted as well and yields a DNF formula with the same literal syntax.
    Clauses are returned exactly as written (not normalized).
    """
    header = None
    clauses: list[list[int]] = []
    current: list[int] = []
    current_start = None
    last_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        last_line = lineno
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            if header is not None:
                raise ParseError("duplicate problem line", lineno)
            parts = line.split()
            if len(parts) != 4 or parts[0] != "p" or parts[1] not in ("cnf", "dnf"):
                raise ParseError(f"malformed header {line!r}", lineno)
            try:
                n, m = int(parts[2]), int(parts[3])
            except ValueError:
                raise ParseError(f"malformed header {line!r}", lineno) from None
            if n < 1 or m < 0:
                raise ParseError("header needs at least one variable", lineno)
            header = (Kind(parts[1]), n, m)
            continue
        if header is None:
            raise ParseError("clause before 'p cnf' header", lineno)
        for token in line.split():
            try:
                value = int(token)
            except ValueError:
                raise ParseError(f"invalid literal {token!r}", lineno) from None
            if value == 0:
                if not current:
                    raise ParseError("empty clause", lineno)
                clauses.append(current)
                current, current_start = [], None
                continue
            if abs(value) > header[1]:
                raise ParseError(
                    f"literal {value} exceeds declared variable count {header[1]}", lineno
                )
            if current_start is None:
                current_start = lineno
            current.append(value)
    if header is None:
        raise ParseError("missing 'p cnf' header", last_line or 1)
    if current:
        raise ParseError("clause missing 0 terminator", current_start)
    kind, n, m = header
    if len(clauses) != m:
        raise ParseError(f"header declares {m} clauses, found {len(clauses)}", last_line)
    return CnfFormula.from_ints(n, clauses, kind)


def emit_dimacs(formula: CnfFormula) -> str:
    lines = [f"p {formula.kind.value} {formula.variable_count} {formula.num_clauses}"]
    lines += [" ".join(map(str, c)) + " 0" for c in formula.to_ints()]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Normalization and 3-CNF conversion


def normalize_clause(clause: Clause) -> Clause | _Trivial:
    """Merge duplicate literals; detect complementary pairs.

    A CNF clause with ``x`` and ``~x`` is ``TAUTOLOGY``; a DNF clause with
    both is ``CONTRADICTION``.  Literal order of first occurrence is kept.
    """
    seen: dict[int, bool] = {}
    literals = []
    for lit in clause.literals:
        if lit.variable in seen:
            if seen[lit.variable] != lit.negated:
                return TAUTOLOGY if clause.kind is Kind.CNF else CONTRADICTION
            continue
        seen[lit.variable] = lit.negated
        literals.append(lit)
    return Clause(tuple(literals), clause.kind)


def normalize_formula(formula: CnfFormula) -> CnfFormula:
    """Normalize every clause and drop the trivial ones (with a warning).

    Dropping preserves semantics: a tautology is the identity of a
    conjunction and a contradiction the identity of a disjunction.
    """
    kept = []
    for i, clause in enumerate(formula.clauses):
        normal = normalize_clause(clause)
        if isinstance(normal, _Trivial):
            logger.warning("dropping clause %d %s: %r", i + 1, clause, normal)
            continue
        kept.append(normal)
    return CnfFormula(formula.variable_count, tuple(kept), formula.kind)


def is_normalized(formula: CnfFormula) -> bool:
    return all(len(set(c.variables)) == len(c) for c in formula.clauses)


@dataclass(frozen=True)
class VariableMapping:
    """Provenance of variables in a converted formula.

    Variables ``1..original_count`` are the input's; every other variable is
    an auxiliary, mapped to the index (0-based) of the input clause it split.
    """

    original_count: int
    auxiliary: dict[int, int] = field(default_factory=dict)

    @property
    def total_count(self) -> int:
        return self.original_count + len(self.auxiliary)


def to_three_cnf(formula: CnfFormula) -> tuple[CnfFormula, VariableMapping]:
    """Split long clauses into a chain of 3-literal clauses.

    ``(l1 | l2 | ... | lk)`` becomes
    ``(l1 | l2 | z1) & (~z1 | l3 | z2) & ... & (~z_{k-3} | l_{k-1} | lk)``
    with fresh variables appended after the current highest index.  The
    result is equisatisfiable with the input, and every satisfying
    assignment of the input extends to one of the output.
    """
    if formula.kind is not Kind.CNF:
        raise ValueError("to_three_cnf requires a CNF formula")
    formula = normalize_formula(formula)
    next_var = formula.variable_count + 1
    auxiliary: dict[int, int] = {}
    out: list[Clause] = []
    for index, clause in enumerate(formula.clauses):
        lits = list(clause.literals)
        if len(lits) <= 3:
            out.append(clause)
            continue
        z = Literal(next_var)
        auxiliary[next_var] = index
        next_var += 1
        out.append(Clause((lits[0], lits[1], z)))
        for lit in lits[2:-2]:
            fresh = Literal(next_var)
            auxiliary[next_var] = index
            next_var += 1
            out.append(Clause((-z, lit, fresh)))
            z = fresh
        out.append(Clause((-z, lits[-2], lits[-1])))
    converted = CnfFormula(next_var - 1, tuple(out), Kind.CNF)
    return converted, VariableMapping(formula.variable_count, auxiliary)


# ---------------------------------------------------------------------------
# Evaluation


def eval_clause(clause: Clause, x: Sequence[int]) -> int:
    return clause.evaluate(x)


def eval_sector(formula: CnfFormula, x: Sequence[int]) -> SectorLabel:
    return tuple(c.evaluate(x) for c in formula.clauses)


def eval_formula(formula: CnfFormula, x: Sequence[int]) -> int:
    label = eval_sector(formula, x)
    return int(all(label)) if formula.kind is Kind.CNF else int(any(label))


def index_to_bits(index: int, n: int) -> Assignment:
    return tuple((index >> (n - 1 - i)) & 1 for i in range(n))


def bits_to_index(bits: Sequence[int]) -> int:
    index = 0
    for b in bits:
        index = (index << 1) | int(b)
    return index


def all_assignments(n: int) -> Iterable[Assignment]:
    """All of {0,1}^n in basis-index order."""
    return itertools.product((0, 1), repeat=n)


def bit_matrix(indices: np.ndarray, n: int) -> np.ndarray:
    """Row ``k`` holds the bits (x1..xn) of basis index ``indices[k]``."""
    indices = np.asarray(indices, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((indices[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def sector_table(formula: CnfFormula, indices=None) -> np.ndarray:
    """Clause evaluations for many basis indices at once.

    Returns a ``(len(indices), N)`` uint8 array; ``indices`` defaults to every
    basis index ``0..2^n-1``.
    """
    n = formula.variable_count
    if indices is None:
        if n > BRUTE_FORCE_LIMIT:
            raise CapacityError(f"{n} variables exceeds brute-force limit {BRUTE_FORCE_LIMIT}")
        indices = np.arange(2**n, dtype=np.int64)
    bits = bit_matrix(indices, n)
    table = np.empty((len(bits), formula.num_clauses), dtype=np.uint8)
    for i, clause in enumerate(formula.clauses):
        vals = np.stack(
            [bits[:, lit.variable - 1] ^ np.uint8(lit.negated) for lit in clause.literals]
        )
        table[:, i] = vals.any(axis=0) if clause.kind is Kind.CNF else vals.all(axis=0)
    return table


def partition(formula: CnfFormula, limit: int = BRUTE_FORCE_LIMIT) -> dict[SectorLabel, list[Assignment]]:
    """Bucket every assignment by its sector label.

    Buckets are listed in order of first appearance (basis-index order) and
    each bucket lists its assignments in basis-index order.  Empty sectors do
    not appear.
    """
    n = formula.variable_count
    if n > limit:
        raise CapacityError(f"partition over {n} variables exceeds limit {limit}")
    table = sector_table(formula)
    buckets: dict[SectorLabel, list[Assignment]] = {}
    for index, row in enumerate(table):
        buckets.setdefault(tuple(int(b) for b in row), []).append(index_to_bits(index, n))
    return buckets


def satisfying_assignments(formula: CnfFormula) -> list[Assignment]:
    """Brute-force enumeration of the formula's models."""
    table = sector_table(formula)
    if formula.kind is Kind.CNF:
        mask = table.all(axis=1)
    else:
        mask = table.any(axis=1)
    return [index_to_bits(int(i), formula.variable_count) for i in np.flatnonzero(mask)]


def random_cnf(n: int, num_clauses: int, rng: np.random.Generator, max_width: int = 3, kind: Kind = Kind.CNF) -> CnfFormula:
    """Normalized formula whose clauses use 1..max_width distinct variables with random signs."""
    clauses = []
    for _ in range(num_clauses):
        width = int(rng.integers(1, min(max_width, n) + 1))
        variables = rng.choice(np.arange(1, n + 1), size=width, replace=False)
        signs = rng.choice([-1, 1], size=width)
        clauses.append([int(v * s) for v, s in zip(variables, signs)])
    return CnfFormula.from_ints(n, clauses, kind)
