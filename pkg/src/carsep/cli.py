"""Command-line front end: ``carsep {verify,analyze,sweep,inequality-scan}``.

Exit status is 0 on success, 1 when a check or scan fails and 2 for usage
errors (bad arguments, malformed state documents, impossible partitions).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from .car_algebra import AlgebraError, Partition
from .entanglement import RoofOptions, eof_tensor, roof_E_avr, roof_E_T
from .expr import ExpressionError
from .named_states import ALIASES, NAMES, NamedStateSpec
from .state_kit import QuantumState, StateError, restrict, restrict_commutant, von_neumann_entropy
from . import statespec

SEED_ENV = "CARSEP_SEED"
DIGITS = 12

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.{DIGITS}g}"
    return str(x)


def _round(obj):
    """Round every float in a JSON-able tree to DIGITS significant digits."""
    if isinstance(obj, (float, np.floating)):
        return float(f"{float(obj):.{DIGITS}g}")
    if isinstance(obj, complex):
        return [_round(obj.real), _round(obj.imag)]
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    return obj


def _write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(_round(doc), indent=1, sort_keys=True) + "\n")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _table(rows, header) -> str:
    cells = [list(map(str, header))] + [[fmt(v) for v in r] for r in rows]
    width = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, width)).rstrip() for r in cells)


# -- state loading -------------------------------------------------------------------


def _parse_params(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"parameter {item!r} is not of the form name=value")
        k, v = item.split("=", 1)
        out[k.strip()] = statespec._parameter(v.strip())
    return out


def load_state(spec: str, params: dict) -> tuple[QuantumState, dict]:
    """A state from a JSON file path or a named-state name."""
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        if not path.exists():
            raise UsageError(f"no such state file {spec!r}")
        if params:
            raise UsageError("--param only applies to named states")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"{spec}: malformed JSON ({exc.msg})") from None
        return statespec.from_document(doc), {"file": str(path)}
    if spec not in NAMES and spec not in ALIASES:
        raise UsageError(f"{spec!r} is neither a state file nor one of {', '.join(NAMES)}")
    named = NamedStateSpec(spec, params)
    return named.build(), {"name": named.name, "parameters": named.parameters}


def _partition(text: str | None, state: QuantumState) -> Partition:
    if text is None:
        if state.algebra.n_modes != 2:
            raise UsageError("--partition is required for states on more than two modes")
        a, b = state.labels
        return Partition((a,), (b,))
    try:
        P = Partition.parse(text)
    except AlgebraError as exc:
        raise UsageError(str(exc)) from None
    if set(P.labels) != set(state.labels):
        raise UsageError(f"partition {text!r} does not cover the state's modes {list(state.labels)}")
    return P


def _options(args) -> RoofOptions:
    return RoofOptions(restarts=args.restarts, tolerance=args.tolerance, seed=args.seed)


# -- subcommands ---------------------------------------------------------------------


def cmd_verify(args, out) -> int:
    from .verify import run_suite

    results = run_suite(seed=args.seed, workers=args.workers, only=args.only)
    if not results:
        raise UsageError("no checks selected")
    rows = [(r["module"], r["name"], "PASS" if r["passed"] else "FAIL", r["detail"]) for r in results]
    print(_table(rows, ("module", "check", "result", "detail")), file=out)
    n_ok = sum(r["passed"] for r in results)
    print(f"{n_ok}/{len(results)} checks passed", file=out)
    if args.out:
        _write_json(args.out, {"seed": args.seed, "checks": [{k: v for k, v in r.items() if k != "seconds"} for r in results]})
    return EXIT_OK if n_ok == len(results) else EXIT_FAIL


def _roof_entry(res) -> dict:
    dec = res.best_decomposition
    return {
        "value": res.value,
        "converged": res.converged,
        "restarts_used": res.restarts_used,
        "gap_estimate": res.gap_estimate,
        "decomposition": {"terms": len(dec), "weights": sorted((float(w) for w in dec.weights), reverse=True)},
    }


def analyze(state: QuantumState, P: Partition, options: RoofOptions) -> dict:
    from .separability import car_separability, hopping_witness, ppt_check

    rI, rJ = restrict(state, P.I), restrict(state, P.J)
    report = {
        "modes": list(state.labels),
        "partition": {"I": list(P.I), "J": list(P.J)},
        "even": state.is_even,
        "pure": state.is_pure,
        "restrictions": {
            "I": {"modes": list(rI.labels), "density": rI.density, "entropy": von_neumann_entropy(rI)},
            "J": {"modes": list(rJ.labels), "density": rJ.density, "entropy": von_neumann_entropy(rJ)},
        },
        "entropies": {
            "S_I": von_neumann_entropy(rI),
            "S_J": von_neumann_entropy(rJ),
            "S_I_commutant": von_neumann_entropy(restrict_commutant(state, P, "I")),
            "S_J_commutant": von_neumann_entropy(restrict_commutant(state, P, "J")),
        },
        "witness": hopping_witness(state, P).as_dict(),
        "ppt": ppt_check(state, P).as_dict(),
        "roofs": {
            "E_avr": _roof_entry(roof_E_avr(state, P, options)),
            "E_I": _roof_entry(eof_tensor(state, P, "I", options)),
            "E_J": _roof_entry(eof_tensor(state, P, "J", options)),
        },
        "car": car_separability(state, P, options).as_dict(),
        "options": {"restarts": options.restarts, "tolerance": options.tolerance, "seed": options.seed,
                    "max_components": options.max_components},
    }
    if state.is_even:
        report["roofs"]["E_T"] = _roof_entry(roof_E_T(state, P, options))
    return report


def cmd_analyze(args, out) -> int:
    state, source = load_state(args.state, _parse_params(args.param))
    P = _partition(args.partition, state)
    report = {"source": source, **analyze(state, P, _options(args))}
    if not args.quiet:
        ent = report["entropies"]
        rows = [
            ("modes", report["modes"]),
            ("partition", f"I={list(P.I)} J={list(P.J)}"),
            ("even / pure", f"{report['even']} / {report['pure']}"),
            ("S(I), S(J)", f"{fmt(ent['S_I'])}, {fmt(ent['S_J'])}"),
            ("S(I'), S(J')", f"{fmt(ent['S_I_commutant'])}, {fmt(ent['S_J_commutant'])}"),
            ("witness", f"{fmt(report['witness']['max_violation'])} at {report['witness']['witness_pair']}"),
            ("PPT (A_I, A_I')", f"{report['ppt']['verdict']} (min eig {fmt(report['ppt']['certificate']['min_eigenvalue'])})"),
        ]
        for key, val in report["roofs"].items():
            rows.append((key, f"{fmt(val['value'])} ({val['decomposition']['terms']} terms)"))
        rows.append(("CAR verdict", report["car"]["verdict"]))
        print(_table(rows, ("quantity", "value")), file=out)
        for side in ("I", "J"):
            r = report["restrictions"][side]
            print(f"\nrestriction to {r['modes']}:", file=out)
            print(np.array2string(np.asarray(r["density"]), precision=DIGITS, suppress_small=True), file=out)
    if args.out:
        _write_json(args.out, report)
    return EXIT_OK


def cmd_sweep(args, out) -> int:
    from .scans import SWEEP_COLUMNS, phi_lambda_sweep

    if args.family != "phi-lambda":
        raise UsageError(f"unknown sweep family {args.family!r}")
    if args.steps < 1:
        raise UsageError("--steps must be positive")
    if max(abs(args.start), abs(args.stop)) > 1:
        raise UsageError("lambda must stay within [-1, 1]")
    rows = phi_lambda_sweep(args.start, args.stop, args.steps, _options(args), args.workers)
    table = [tuple(getattr(r, c) for c in SWEEP_COLUMNS) for r in rows]
    print(_table(table, SWEEP_COLUMNS), file=out)
    if args.out:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        w.writerows([fmt(v) for v in r] for r in table)
        Path(args.out).write_text(buf.getvalue())
    return EXIT_OK


def cmd_inequality_scan(args, out) -> int:
    from .scans import as_row, inequality_scan, summarize_scan

    if args.trials < 1:
        raise UsageError("--trials must be positive")
    try:
        P = Partition.parse(args.partition)
    except AlgebraError as exc:
        raise UsageError(str(exc)) from None
    records = inequality_scan(args.seed, args.trials, P, even=not args.noneven, options=_options(args),
                              workers=args.workers)
    summary = summarize_scan(records, tol=args.inequality_tol)
    cols = ("trial", "E_avr", "E_I", "E_J", "E_T", "half_slack", "T_avr_gap", "T_I_gap")
    print(_table([tuple(getattr(r, c) for c in cols) for r in records], cols), file=out)
    print(f"\nminimal E_T - E_avr gap: {fmt(summary['min_T_avr_gap'])}", file=out)
    print(f"minimal half-inequality slack: {fmt(summary['min_half_slack'])}", file=out)
    print(f"violations beyond {fmt(summary['tolerance'])}: {summary['violations'] or 'none'}", file=out)
    if args.out:
        _write_json(args.out, {"seed": args.seed, "partition": args.partition, "even": not args.noneven,
                               "summary": summary, "records": [as_row(r) for r in records]})
    return EXIT_OK if not summary["violations"] else EXIT_FAIL


# -- parser --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    seed = _default_seed()
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=seed, help=f"RNG seed (default ${SEED_ENV} or 0)")
    common.add_argument("--out", help="machine-readable report file")
    common.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    roof = _Parser(add_help=False)
    roof.add_argument("--restarts", type=int, default=RoofOptions.restarts)
    roof.add_argument("--tolerance", type=float, default=RoofOptions.tolerance)

    p = _Parser(prog="carsep", description="Separability tools for fermion lattice systems.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    v = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    v.add_argument("--only", nargs="+", metavar="CHECK", help="run only the named checks")
    v.set_defaults(func=cmd_verify)

    a = sub.add_parser("analyze", parents=[common, roof], help="full report for one state")
    a.add_argument("state", help="state JSON file or a named state")
    a.add_argument("--partition", help="'I:J' (e.g. 1,2:3) or the two-mode shorthand '1,2'")
    a.add_argument("--param", action="append", metavar="NAME=VALUE", help="named-state parameter")
    a.add_argument("--quiet", action="store_true", help="write the report file only")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("sweep", parents=[common, roof], help="parameter sweep over a state family")
    s.add_argument("family", choices=["phi-lambda"])
    s.add_argument("--from", dest="start", type=float, default=-1.0)
    s.add_argument("--to", dest="stop", type=float, default=1.0)
    s.add_argument("--steps", type=int, default=21)
    s.set_defaults(func=cmd_sweep)

    q = sub.add_parser("inequality-scan", parents=[common, roof], help="random-state check of the roof inequalities")
    q.add_argument("--trials", type=int, default=20)
    q.add_argument("--partition", default="1:2")
    q.add_argument("--noneven", action="store_true", help="sample noneven states (E_T undefined)")
    q.add_argument("--inequality-tol", type=float, default=2e-3)
    q.set_defaults(func=cmd_inequality_scan)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except UsageError as exc:
        print(f"carsep: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StateError, AlgebraError, ExpressionError) as exc:
        print(f"carsep: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
