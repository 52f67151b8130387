"""Dissipative qubit networks that evaluate CNF/DNF formulas on quantum data."""

from .classify import ClassificationResult, classify_exact, classify_passive, classify_sampled, sector_weights
from .dynamics import Mode, NetworkConfig, evolve, evolve_density, fixed_point_projection
from .errors import CapacityError, DfsNetError, ParseError, PromiseViolation, ZeroProbabilityError
from .formula import CnfFormula, Clause, Kind, Literal, emit_dimacs, normalize_formula, parse_dimacs, to_three_cnf
from .qstate import JointState, PureState, born_probabilities, densify, measure_ancillas, postselect

__version__ = "0.1.0"
