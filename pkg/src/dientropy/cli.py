"""Command-line front end: ``dientropy <command> [options]``.

Exit codes: 0 ok, 2 usage or malformed input, 3 infeasible, 4 size cap
exceeded, 5 I/O error. Failures print one JSON line on stderr.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from .core import InvalidBehavior, InvalidDistribution, Scenario, as_fraction, load_behavior, validate_behavior
from .strategies import SizeCapExceeded, dump_strategies, enumerate_strategies, strategy_count, zero_entropy_example
from .witnesses import ScenarioMismatch, evaluate, load_witness

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_CAP = 4
EXIT_IO = 5

JOBS_ENV = "DIENTROPY_JOBS"

log = logging.getLogger("dientropy")


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_USAGE, "usage", message)


def default_jobs() -> int:
    raw = os.environ.get(JOBS_ENV)
    if raw:
        try:
            jobs = int(raw)
        except ValueError:
            raise CliError(EXIT_USAGE, "usage", f"{JOBS_ENV} must be an integer, got {raw!r}")
        if jobs < 1:
            raise CliError(EXIT_USAGE, "usage", f"{JOBS_ENV} must be positive")
        return jobs
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


@dataclass(frozen=True)
class Grid:
    lo: Fraction
    hi: Fraction
    points: int

    def values(self) -> list[Fraction]:
        if self.points == 1:
            return [self.lo]
        return [self.lo + (self.hi - self.lo) * i / (self.points - 1) for i in range(self.points)]


def parse_grid(text: str) -> Grid:
    """``lo:hi:points``; ``log2(d)`` is accepted for entropy caps."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid must look like lo:hi:points, got {text!r}")
    try:
        lo, hi = (_number(p) for p in parts[:2])
        points = int(parts[2])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    if points < 1 or lo > hi:
        raise argparse.ArgumentTypeError("grid needs lo <= hi and at least one point")
    return Grid(lo, hi, points)


def _number(text: str) -> Fraction:
    text = text.strip()
    if text.startswith("log2(") and text.endswith(")"):
        return Fraction(math.log2(float(text[5:-1])))
    return as_fraction(text)


@contextlib.contextmanager
def _output(path: str | None):
    if path in (None, "-"):
        yield sys.stdout
        return
    try:
        fh = open(path, "w", newline="")
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot write {path}: {exc.strerror}")
    with fh:
        yield fh


def _dump_json(data, fh) -> None:
    json.dump(data, fh, indent=2, sort_keys=True)
    fh.write("\n")


def _frac(v: Fraction) -> str:
    return str(v)


def _witness(spec: str):
    try:
        return load_witness(spec)
    except FileNotFoundError:
        raise CliError(EXIT_IO, "io", f"witness {spec!r} is neither built in nor a readable file")
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CliError(EXIT_USAGE, "malformed_json", f"witness {spec}: {exc}")


def _behavior(path: str, check: bool = True):
    try:
        return load_behavior(path, check=check)
    except FileNotFoundError:
        raise CliError(EXIT_IO, "io", f"behavior file {path!r} not found")
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot read {path}: {exc.strerror}")
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CliError(EXIT_USAGE, "malformed_json", f"behavior {path}: {exc}")
    except (InvalidBehavior, InvalidDistribution, ValueError) as exc:
        raise CliError(EXIT_USAGE, "invalid_behavior", f"behavior {path}: {exc}")


def _plan(args, **resolved) -> int:
    plan = {"command": args.command, **{k: (str(v) if isinstance(v, Fraction) else v) for k, v in resolved.items()}}
    _dump_json(plan, sys.stdout)
    return EXIT_OK


# -- sub-commands -------------------------------------------------------------


def cmd_min_entropy(args) -> int:
    from .entropy_lp import Infeasible, min_entropy_exact, witness_minimum

    if (args.witness is None) == (args.behavior is None):
        raise CliError(EXIT_USAGE, "usage", "give exactly one of --witness or --behavior")
    if args.witness is not None:
        if args.value is None:
            raise CliError(EXIT_USAGE, "usage", "--value is required with --witness")
        w = _witness(args.witness)
        value = _number(args.value)
        if args.dry_run:
            return _plan(args, witness=w.name, value=value, dmax=args.dmax)
        try:
            res = witness_minimum(w, value, args.dmax, cap=args.cap)
        except Infeasible as exc:
            raise CliError(EXIT_INFEASIBLE, "infeasible", str(exc))
        out = {
            "witness": w.name,
            "value": _frac(value),
            "H_min_bits": round(res.entropy, 12),
            "distribution": [_frac(p) for p in res.distribution],
            "d_active": res.d,
            "per_d": {str(d): round(h, 12) for d, h in sorted(res.per_d.items())},
        }
    else:
        b = _behavior(args.behavior)
        d = args.d if args.d is not None else args.dmax
        if args.dry_run:
            return _plan(args, behavior=args.behavior, d=d, scenario=[b.scenario.n, b.scenario.l, b.scenario.k])
        try:
            res = min_entropy_exact(b, d, cap=args.cap)
        except Infeasible as exc:
            raise CliError(EXIT_INFEASIBLE, "infeasible", str(exc))
        out = {
            "behavior": os.path.basename(args.behavior),
            "d": d,
            "H_min_bits": round(res.entropy, 12),
            "distribution": [_frac(p) for p in res.distribution],
            "vertices": [[_frac(p) for p in v] for v in res.vertices],
            "mixture": [{"weight": _frac(q), "strategy": st.to_json()} for st, q in zip(res.mixture.strategies, res.mixture.weights)],
        }
    with _output(args.out) as fh:
        _dump_json(out, fh)
    return EXIT_OK


def _curve_point(task):
    from .entropy_lp import min_entropy_curve

    witness_spec, value, dmax = task
    return min_entropy_curve(load_witness(witness_spec), [value], dmax)[0]


def cmd_curve(args) -> int:
    from .entropy_lp import CurvePointFailed, write_curve_csv

    w = _witness(args.witness)
    grid = args.grid or Grid(w.bound(1), w.algebraic_max, 41)
    values = grid.values()
    if args.dry_run:
        return _plan(args, witness=w.name, grid=[str(grid.lo), str(grid.hi), grid.points], dmax=args.dmax, jobs=args.jobs)
    tasks = [(args.witness, v, args.dmax) for v in values]
    try:
        if args.jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(min(args.jobs, len(tasks))) as pool:
                rows = list(pool.map(_curve_point, tasks))
        else:
            rows = [_curve_point(t) for t in tasks]
    except CurvePointFailed as exc:
        raise CliError(EXIT_INFEASIBLE, "infeasible", str(exc))
    with _output(args.out) as fh:
        write_curve_csv(rows, fh)
    return EXIT_OK


def _dag(spec: str):
    from .entropic_cone import TEMPLATES, CausalDag, UnsupportedDag

    if spec in TEMPLATES:
        return TEMPLATES[spec]()
    try:
        with open(spec) as fh:
            return CausalDag.from_json(json.load(fh))
    except FileNotFoundError:
        raise CliError(EXIT_IO, "io", f"DAG {spec!r} is neither a template ({', '.join(sorted(TEMPLATES))}) nor a file")
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CliError(EXIT_USAGE, "malformed_json", f"DAG {spec}: {exc}")
    except UnsupportedDag as exc:
        raise CliError(EXIT_USAGE, "unsupported_dag", str(exc))


def cmd_facets(args) -> int:
    from .entropic_cone import MAX_CONE_VARS, RowCapExceeded, UnsupportedDag, dag_system, facets_json, fm_eliminate, keep_observables, observed_contexts, write_facets

    dag = _dag(args.dag)
    if len(dag.nodes) > MAX_CONE_VARS:
        raise CliError(EXIT_CAP, "cap_exceeded", f"{len(dag.nodes)} variables exceed the cap of {MAX_CONE_VARS}")
    try:
        keep = keep_observables(dag, observed_contexts(dag), ["M"])
    except UnsupportedDag as exc:
        raise CliError(EXIT_USAGE, "unsupported_dag", str(exc))
    if args.dry_run:
        return _plan(args, dag=dag.to_json(), kept_coordinates=len(keep), row_cap=args.row_cap)
    try:
        result = fm_eliminate(dag_system(dag), keep, row_cap=args.row_cap)
    except RowCapExceeded as exc:
        raise CliError(EXIT_CAP, "cap_exceeded", str(exc))
    with _output(args.out) as fh:
        if args.format == "json":
            _dump_json(facets_json(result), fh)
        else:
            write_facets(result, fh, nontrivial_only=not args.all)
    return EXIT_OK


def cmd_entropic_bound(args) -> int:
    from .core import Distribution
    from .entropic_cone import evaluate_entropic_witness, holevo_lhs, single_flip_joint

    b = _behavior(args.behavior)
    if args.dry_run:
        return _plan(args, behavior=args.behavior, joint=args.joint)
    if args.joint == "holevo":
        lhs = holevo_lhs(b)
        out = {"form": "I(X:Y,B)", "lhs_bits": round(lhs, 12), "terms": {}}
    else:
        if args.joint == "single-flip":
            joint = single_flip_joint(b.scenario.n)
        else:
            try:
                with open(args.joint) as fh:
                    data = json.load(fh)
                joint = Distribution(tuple(as_fraction(w) for w in data["weights"]), tuple(tuple(t) for t in data["labels"]))
            except FileNotFoundError:
                raise CliError(EXIT_IO, "io", f"joint file {args.joint!r} not found")
            except (json.JSONDecodeError, KeyError, TypeError, InvalidDistribution) as exc:
                raise CliError(EXIT_USAGE, "malformed_json", f"joint {args.joint}: {exc}")
        try:
            res = evaluate_entropic_witness(b, joint, args.l)
        except ValueError as exc:
            raise CliError(EXIT_USAGE, "usage", str(exc))
        out = {"form": f"l={args.l or b.scenario.l}", "lhs_bits": round(res.lhs, 12), "terms": {k: round(v, 12) for k, v in res.terms.items()}}
    out["statement"] = f"H(M) >= {out['lhs_bits']:.9f} and S(rho) >= {out['lhs_bits']:.9f}"
    with _output(args.out) as fh:
        _dump_json(out, fh)
    return EXIT_OK


def cmd_quantum_curve(args) -> int:
    from .quantum import dump_ensemble, max_witness_given_entropy, quantum_entropy_curve, write_quantum_csv

    w = _witness(args.witness)
    if args.d not in (2, 3, 4):
        raise CliError(EXIT_USAGE, "usage", "--d must be 2, 3 or 4")
    top = math.log2(args.d)
    grid = args.grid or Grid(Fraction(0), Fraction(top), 11)
    caps = [min(float(v), top) for v in grid.values()]
    if args.dry_run:
        return _plan(args, witness=w.name, d=args.d, caps=caps, restarts=args.restarts, seed=args.seed, mixed=args.mixed, real_only=args.real_only, jobs=args.jobs)
    rows = quantum_entropy_curve(w, args.d, caps, args.restarts, args.real_only, args.mixed, args.seed, maxfev=args.maxfev, jobs=args.jobs)
    with _output(args.out) as fh:
        write_quantum_csv(rows, fh)
    if args.ensemble_out:
        best = max_witness_given_entropy(w, args.d, caps[-1], 1, args.real_only, args.mixed, args.seed, maxfev=args.maxfev, stream=len(caps))
        try:
            dump_ensemble(best.ensemble, args.ensemble_out)
        except OSError as exc:
            raise CliError(EXIT_IO, "io", f"cannot write {args.ensemble_out}: {exc.strerror}")
    return EXIT_OK


def cmd_strategies(args) -> int:
    s = Scenario(args.n, args.l, args.k)
    count = strategy_count(s, args.d)
    if args.dry_run:
        return _plan(args, scenario=[args.n, args.l, args.k], d=args.d, dedup=args.dedup, raw_count=count, cap=args.cap)
    try:
        strategies = enumerate_strategies(s, args.d, dedup=args.dedup, cap=args.cap)
    except SizeCapExceeded as exc:
        raise CliError(EXIT_CAP, "cap_exceeded", str(exc))
    if args.out in (None, "-"):
        for st in strategies:
            sys.stdout.write(json.dumps(st.to_json(), sort_keys=True) + "\n")
    else:
        try:
            dump_strategies(strategies, args.out)
        except OSError as exc:
            raise CliError(EXIT_IO, "io", f"cannot write {args.out}: {exc.strerror}")
    return EXIT_OK


def cmd_zero_entropy(args) -> int:
    if args.dry_run:
        return _plan(args, d=args.d, n=args.d * args.d)
    try:
        ex = zero_entropy_example(args.d)
    except SizeCapExceeded as exc:
        raise CliError(EXIT_CAP, "cap_exceeded", str(exc))
    except ValueError as exc:
        raise CliError(EXIT_USAGE, "usage", str(exc))
    out = {
        "d": ex.d,
        "n": ex.d * ex.d,
        "witness_value": _frac(ex.witness_value),
        "bound_L_d": _frac(ex.bound),
        "exceeds_bound": ex.witness_value > ex.bound,
        "H_bits": round(ex.entropy, 12),
        "H_closed_form_bits": round(ex.closed_form_entropy, 12),
        "strategy": ex.strategy.to_json(),
    }
    with _output(args.out) as fh:
        _dump_json(out, fh)
    return EXIT_OK


def cmd_validate(args) -> int:
    b = _behavior(args.behavior, check=False)
    if args.dry_run:
        return _plan(args, behavior=args.behavior, witness=args.witness)
    violations = validate_behavior(b)
    out = {"valid": not violations, "violations": [str(v) for v in violations]}
    if args.witness and not violations:
        w = _witness(args.witness)
        try:
            value = evaluate(w, b)
        except ScenarioMismatch as exc:
            raise CliError(EXIT_USAGE, "usage", str(exc))
        out["witness"] = {"name": w.name, "value": _frac(value), "classical_dimension_at_least": w.active_dimension(value)}
    with _output(args.out) as fh:
        _dump_json(out, fh)
    return EXIT_OK if not violations else EXIT_USAGE


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", "-o", default=None, help="output file (default: stdout)")
    common.add_argument("--dry-run", action="store_true", help="validate inputs and print the plan only")
    common.add_argument("--jobs", type=int, default=None, help=f"worker processes (default: ${JOBS_ENV} or all CPUs)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--log-level", default="WARNING")

    parser = _Parser(prog="dientropy", description="Entropy bounds for prepare-and-measure data.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("min-entropy", parents=[common], help="minimum message entropy for a witness value or a behavior")
    p.add_argument("--witness")
    p.add_argument("--value")
    p.add_argument("--behavior")
    p.add_argument("--dmax", type=int, default=4)
    p.add_argument("--d", type=int, default=None, help="message size for --behavior (default: --dmax)")
    p.add_argument("--cap", type=int, default=10**7)
    p.set_defaults(func=cmd_min_entropy)

    p = sub.add_parser("curve", parents=[common], help="minimum entropy over a grid of witness values (CSV)")
    p.add_argument("--witness", required=True)
    p.add_argument("--grid", type=parse_grid, help="lo:hi:points (default: L_1:max:41)")
    p.add_argument("--dmax", type=int, default=4)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("facets", parents=[common], help="non-trivial entropic inequalities of a causal template")
    p.add_argument("--dag", required=True, help="fig1b, fig1c, fig1c_split or a DAG JSON file")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--all", action="store_true", help="also list trivial inequalities (text format)")
    p.add_argument("--row-cap", type=int, default=20000)
    p.set_defaults(func=cmd_facets)

    p = sub.add_parser("entropic-bound", parents=[common], help="evaluate an entropic witness on a behavior")
    p.add_argument("--behavior", required=True)
    p.add_argument("--joint", default="holevo", help="holevo, single-flip, or a JSON file with labels and weights")
    p.add_argument("--l", type=int, default=None)
    p.set_defaults(func=cmd_entropic_bound)

    p = sub.add_parser("quantum-curve", parents=[common], help="best quantum witness value per entropy cap (CSV)")
    p.add_argument("--witness", required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--grid", type=parse_grid, help="lo:hi:points over entropy caps in bits")
    p.add_argument("--restarts", type=int, default=50)
    p.add_argument("--maxfev", type=int, default=4000)
    p.add_argument("--real-only", action="store_true")
    p.add_argument("--mixed", action="store_true")
    p.add_argument("--ensemble-out", default=None)
    p.set_defaults(func=cmd_quantum_curve)

    p = sub.add_parser("strategies", parents=[common], help="enumerate deterministic strategies (JSON lines)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--dedup", action="store_true")
    p.add_argument("--cap", type=int, default=10**7)
    p.set_defaults(func=cmd_strategies)

    p = sub.add_parser("example-zero-entropy", parents=[common], help="low-entropy behavior beyond the d-message bound")
    p.add_argument("--d", type=int, required=True)
    p.set_defaults(func=cmd_zero_entropy)

    p = sub.add_parser("validate", parents=[common], help="check a behavior file")
    p.add_argument("--behavior", required=True)
    p.add_argument("--witness", default=None)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        if not args.command:
            raise CliError(EXIT_USAGE, "usage", "missing command")
        logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING), stream=sys.stderr)
        if args.jobs is None:
            args.jobs = default_jobs()
        if args.jobs < 1:
            raise CliError(EXIT_USAGE, "usage", "--jobs must be positive")
        return args.func(args)
    except CliError as exc:
        sys.stderr.write(json.dumps({"error": exc.kind, "exit": exc.code, "message": str(exc)}) + "\n")
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
