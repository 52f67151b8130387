"""Command-line front end: classify, learn, prep {bell,pac,sat}, verify.

Exit codes: 0 ok, 1 verification failure, 2 parse error, 3 capacity,
4 promise violation, 5 no convergence, 6 zero-probability post-selection.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import apps, learn, verify
from .classify import classify_exact, classify_passive, classify_sampled
from .dynamics import Mode, NetworkConfig
from .errors import CapacityError, ParseError, PromiseViolation, ZeroProbabilityError
from .formula import CnfFormula, normalize_formula, parse_dimacs, to_three_cnf
from .qstate import STATE_LIMIT, JointState, PureState, densify, state_from_json

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_PARSE = 2
EXIT_CAPACITY = 3
EXIT_PROMISE = 4
EXIT_NO_CONVERGENCE = 5
EXIT_ZERO_PROBABILITY = 6

T_COLUMN = "t_in_units_of_inverse_gamma"

log = logging.getLogger("dfsnet")


def fmt(value) -> str:
    """12 significant digits; infinities spelled ``inf``."""
    if isinstance(value, str):
        return value
    if value is None:
        return ""
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.12g}"


def jnum(value):
    """JSON twin of :func:`fmt`: a rounded float, or a string for infinities."""
    value = float(value)
    return fmt(value) if math.isinf(value) else float(f"{value:.12g}")


def parse_time(text: str) -> float:
    try:
        t = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid time {text!r}") from None
    if math.isnan(t) or t < 0:
        raise argparse.ArgumentTypeError("time must be >= 0 or 'inf'")
    return t


def positive_float(text: str) -> float:
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError("must be positive and finite")
    return v


def bits_str(label) -> str:
    return "".join(map(str, label))


def read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None


def load_formula(path: str, max_qubits: int) -> CnfFormula:
    formula = normalize_formula(parse_dimacs(read_text(path)))
    if any(len(c) > 3 for c in formula.clauses):
        formula, mapping = to_three_cnf(formula)
        log.warning("converted to 3-CNF with %d auxiliary variables", len(mapping.auxiliary))
    if formula.variable_count > max_qubits:
        raise CapacityError(f"formula has {formula.variable_count} variables, limit is {max_qubits}")
    return formula


def load_state(path: str, n: int) -> PureState:
    psi = state_from_json(read_text(path))
    if psi.n != n:
        raise ParseError(f"state has {psi.n} qubits but the formula has {n} variables")
    return psi


def emit(args, text: str):
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def state_record(state: PureState) -> dict:
    return {
        "n": state.n,
        "amplitudes": [
            {"bits": format(k, f"0{state.n}b"), "re": jnum(v.real), "im": jnum(v.imag)}
            for k, v in state.amplitudes.items()
        ],
    }


# ---------------------------------------------------------------------------
# classify


def cmd_classify(args) -> int:
    formula = load_formula(args.formula, args.max_qubits)
    psi = load_state(args.state, formula.variable_count)
    net = NetworkConfig(formula, args.gamma, Mode(args.mode))
    t = args.time
    t_units = t * args.gamma

    if args.passive:
        label, post = classify_passive(net, psi, t, args.seed)
        if args.format == "json":
            emit(args, json_text({T_COLUMN: jnum(t_units), "seed": args.seed, "sector": bits_str(label), "state": state_record(post)}))
        else:
            emit(args, csv_text(["sector", "seed", T_COLUMN], [[bits_str(label), str(args.seed), t_units]]))
        return EXIT_OK

    exact = classify_exact(psi, formula)
    sampled = classify_sampled(net, psi, t, args.shots, args.seed) if args.shots else None

    rows = []
    keys = sorted(set(exact.sector_weights) | set(sampled.sector_weights if sampled else ()))
    for key in keys:
        s = se = None
        if sampled:
            s = sampled.sector_weights.get(key, 0.0)
            se = sampled.stderr.get(key, 0.0)
        rows.append(["sector_weight", bits_str(key), exact.sector_weights.get(key, 0.0), s, se])
    for i, c in enumerate(exact.c_tilde):
        rows.append(["c_tilde", str(i + 1), c,
                     sampled.c_tilde[i] if sampled else None,
                     sampled.stderr["c_tilde"][i] if sampled else None])
    for name in ("c_hat_1", "c_hat_2"):
        rows.append([name, "", getattr(exact, name),
                     getattr(sampled, name) if sampled else None,
                     sampled.stderr[name] if sampled else None])

    if args.format == "json":
        out = {T_COLUMN: jnum(t_units), "shots": args.shots, "seed": args.seed, "rows": [
            {"quantity": q, "key": k, "exact": jnum(e),
             "sampled": None if s is None else jnum(s), "stderr": None if se is None else jnum(se)}
            for q, k, e, s, se in rows
        ]}
        emit(args, json_text(out))
    else:
        header = ["quantity", "key", "exact", "sampled", "stderr", T_COLUMN]
        emit(args, csv_text(header, [r + [t_units] for r in rows]))
    return EXIT_OK


# ---------------------------------------------------------------------------
# learn


NOISY_TIME = 1.0  # in units of 1/gamma


def cmd_learn(args) -> int:
    n = args.num_vars
    if not 1 <= n <= STATE_LIMIT:
        raise CapacityError(f"--num-vars must lie in 1..{STATE_LIMIT}")
    target = learn.parse_target(read_text(args.target), n)
    t = args.time
    if t is None and args.noisy:
        t = NOISY_TIME / args.gamma
    stream = learn.random_samples(target, args.seed, superposed_fraction=args.superposed)
    result = learn.train(n, stream, args.samples, t, args.seed, args.gamma, target)
    ok = result.converged and result.update_count <= 2 * n

    rows = [
        [str(r.step), str(r.label), bits_str(r.measured_sector),
         " ".join(str(lit.to_int()) for lit in r.literals_removed), str(r.remaining_count)]
        for r in result.log
    ]
    hyp = " ".join(str(lit.to_int()) for lit in result.hypothesis.ordered())
    if args.format == "json":
        emit(args, json_text({
            "hypothesis": hyp, "converged": result.converged, "update_count": result.update_count,
            "samples_used": result.samples_used, "seed": args.seed,
            T_COLUMN: None if t is None else jnum(t * args.gamma),
            "log": [dict(zip(["step", "label", "measured_sector", "literals_removed", "remaining_count"], r)) for r in rows],
        }))
    else:
        emit(args, csv_text(["step", "label", "measured_sector", "literals_removed", "remaining_count"], rows))
    if args.hypothesis_out:
        Path(args.hypothesis_out).write_text(hyp + "\n")
    print(
        f"hypothesis: {result.hypothesis}  updates={result.update_count}  samples={result.samples_used}"
        f"  converged={'yes' if ok else 'no'}",
        file=sys.stderr,
    )
    return EXIT_OK if ok else EXIT_NO_CONVERGENCE


# ---------------------------------------------------------------------------
# prep


def _prep_output(args, state, meta: dict) -> int:
    if isinstance(state, JointState):
        rho = densify(state)
        meta = {**meta, "n_total": state.n + state.N}
        if args.format == "json":
            emit(args, json_text({**meta, "density_re": [[jnum(v) for v in r] for r in rho.real],
                                  "density_im": [[jnum(v) for v in r] for r in rho.imag]}))
        else:
            dim = rho.shape[0]
            rows = [[format(i, f"0{meta['n_total']}b"), format(j, f"0{meta['n_total']}b"), rho[i, j].real, rho[i, j].imag]
                    for i in range(dim) for j in range(dim) if abs(rho[i, j]) > 0]
            emit(args, csv_text(["row", "col", "re", "im"], rows))
        return EXIT_OK
    if not isinstance(state, PureState):
        state = PureState.from_vector(_top_eigvec(state))
        log.warning("post-selected state is mixed; writing its dominant eigenvector")
    if args.format == "json":
        emit(args, json_text({**meta, **state_record(state)}))
    else:
        rec = state_record(state)
        emit(args, csv_text(["bits", "re", "im"], [[a["bits"], a["re"], a["im"]] for a in rec["amplitudes"]]))
    return EXIT_OK


def _top_eigvec(rho):
    _, vecs = np.linalg.eigh(rho)
    return vecs[:, -1]


def cmd_prep(args) -> int:
    t, gamma = args.time, args.gamma
    meta = {T_COLUMN: jnum(t * gamma), "gamma": jnum(gamma), "seed": args.seed}
    if args.which == "bell":
        prep = apps.prep_bell(t, gamma)
        meta["success_probability"] = jnum(prep.success_probability)
        if args.series:
            Path(args.series).write_text(csv_text(
                [T_COLUMN, "distance", "success_probability"], [list(r) for r in prep.series]
            ))
        return _prep_output(args, prep.state, meta)

    formula = load_formula(args.formula, args.max_qubits)
    if args.which == "pac":
        psi = load_state(args.state, formula.variable_count) if args.state else None
        if psi is None:
            raise ParseError("prep pac needs --state")
        out = apps.prep_pac(psi, formula, t, gamma)
        if isinstance(out, JointState) and out.n + out.N > args.max_qubits:
            raise CapacityError("finite-time PAC output is mixed and too large to write densely")
        return _prep_output(args, out, meta)

    state, prob = apps.sat_superposition(formula, t, gamma)
    meta["success_probability"] = jnum(prob)
    if state is None:
        print(json_text({**meta, "error": "post-selection has probability 0; formula is unsatisfiable"}), end="", file=sys.stderr)
        return EXIT_ZERO_PROBABILITY
    return _prep_output(args, state, meta)


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    results = verify.run_verification(args.seed, args.count, args.max_qubits, args.inject_fault)
    text = verify.format_table(results)
    emit(args, text)
    failed = [r for r in results if not r.passed]
    for r in failed:
        print(f"FAILED {r.check}: {r.case} t={fmt(r.t)} distance={r.measured:.3e}", file=sys.stderr)
    return EXIT_VERIFY if failed else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--gamma", type=positive_float, default=1.0, help="dissipation rate")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--output", "-o", help="output path (default stdout)")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--max-qubits", type=int, default=20, help="refuse problems larger than this")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="dfsnet", description="Dissipative clause networks for Boolean formulas.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", parents=[common], help="sector weights and classifiers of a state")
    c.add_argument("--formula", required=True, help="DIMACS file")
    c.add_argument("--state", required=True, help="JSON state file")
    c.add_argument("--time", type=parse_time, default=math.inf, help="evolution time, or 'inf'")
    c.add_argument("--shots", type=int, default=0, help="sampled estimates with this many readouts")
    c.add_argument("--mode", choices=[m.value for m in Mode], default="standard")
    c.add_argument("--passive", action="store_true", help="measure the sector of a single-sector state")
    c.set_defaults(func=cmd_classify)

    lp = sub.add_parser("learn", parents=[common], help="learn a conjunction from random samples")
    lp.add_argument("--target", required=True, help="file with one line of signed literals, e.g. '1 -3'")
    lp.add_argument("--num-vars", type=int, required=True)
    lp.add_argument("--samples", type=int, default=200, help="sample budget")
    lp.add_argument("--time", type=parse_time, default=None, help="per-step evolution time (default: error 1e-9)")
    lp.add_argument("--noisy", action="store_true", help=f"use a short evolution time ({NOISY_TIME:g}/gamma)")
    lp.add_argument("--superposed", type=float, default=0.0, help="fraction of superposed samples")
    lp.add_argument("--hypothesis-out", help="write the final hypothesis here")
    lp.set_defaults(func=cmd_learn)

    pp = sub.add_parser("prep", parents=[common], help="state preparation by post-selection")
    pp.add_argument("which", choices=["bell", "pac", "sat"])
    pp.add_argument("--formula", help="DIMACS file (pac, sat)")
    pp.add_argument("--state", help="JSON state file of amplitudes sqrt(p(x)) (pac)")
    pp.add_argument("--time", type=parse_time, default=math.inf)
    pp.add_argument("--series", help="bell: write the distance series CSV here")
    pp.set_defaults(func=cmd_prep)

    vp = sub.add_parser("verify", parents=[common], help="analytic vs brute-force self-check")
    vp.add_argument("--count", type=int, default=8, help="number of random networks")
    vp.add_argument("--inject-fault", action="store_true", help="corrupt the analytic channel on purpose")
    vp.set_defaults(func=cmd_verify, max_qubits=10)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.command == "prep" and args.which != "bell" and not args.formula:
        print("error: prep pac/sat needs --formula", file=sys.stderr)
        return EXIT_PARSE
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except PromiseViolation as exc:
        print(f"promise violation: {exc}", file=sys.stderr)
        return EXIT_PROMISE
    except ZeroProbabilityError as exc:
        print(f"zero probability: {exc}", file=sys.stderr)
        return EXIT_ZERO_PROBABILITY


if __name__ == "__main__":
    sys.exit(main())
