"""Command-line front end.

    cubeharmonic analyze --family tribes:k=2,m=2
    cubeharmonic sweep --family tribes-auto --metric influence-closed-form
    cubeharmonic verify all
    cubeharmonic search talagrand1 --n 6 --budget 10000 --seed 42

Exit status: 0 success, 1 verification failure, 2 usage or parse error,
3 capacity error.  Output depends only on the arguments.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .cube import (
    BooleanFunction,
    format_truth_table,
    influence_profile,
    mean,
    parse_real_table,
    parse_truth_table,
    variance,
)
from .errors import CapacityError, ConfigurationError, ParseError
from .inequalities import (
    CSV_COLUMNS,
    DEFAULT_S0,
    INEQUALITIES,
    constant_search,
    corollary_alternative_report,
    report,
)
from .verification import run_suite
from .zoo import (
    build_family,
    choose_tribes_params,
    majority,
    parse_family_spec,
    tribes_influence_closed_form,
    tribes_mean,
    tribes_pair_influence_closed_form,
)

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3

CLOSED_FORM_METRICS = ("influence-closed-form", "pair-influence-closed-form")
CLOSED_FORM_MAX_N = 1 << 20
# appended after CSV_COLUMNS, per metric
SWEEP_EXTRA_COLUMNS = {
    "influence-closed-form": ["k", "m", "mean"],
    "pair-influence-closed-form": ["k", "m", "mean"],
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# serialization


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


def dump_csv(columns: list, rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow(["" if isinstance(v, float) and not math.isfinite(v) else
                    repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# inputs


def load_table(path: str):
    """Read a truth table ("n=k" then a 0/1 string) or a real table ("n=k"
    then one value per token).  Real tables with only 0/1 values become
    Boolean functions."""
    text = Path(path).read_text()
    try:
        return parse_truth_table(text)
    except ParseError as first:
        try:
            f = parse_real_table(text)
        except ParseError:
            raise first from None
    if np.all((f.values == 0) | (f.values == 1)):
        return BooleanFunction.from_bits(f.values.astype(bool))
    return f


def _input_function(args):
    if args.table and args.family:
        raise UsageError("give either --family or --table, not both")
    if args.table:
        return load_table(args.table), args.table
    if args.family:
        return build_family(args.family, args.n), args.family
    raise UsageError("one of --family or --table is required")


def read_config(path: str) -> dict:
    """``key=value`` lines; ``#`` starts a comment; keys use flag spelling."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, val = line.partition("=")
        if not eq or not key.strip():
            raise ParseError("expected key=value", lineno, 1)
        out[key.strip().lstrip("-").replace("-", "_")] = val.strip()
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(args) -> int:
    f, source = _input_function(args)
    bundle: dict = {"source": source, "n": f.n, "boolean": isinstance(f, BooleanFunction),
                    "mean": mean(f),
                    "variance": variance(f)}
    reports = [report(name, f, args.s0) for name in ("poincare", "talagrand1", "talagrand2")]
    if isinstance(f, BooleanFunction):
        bundle["influences"] = influence_profile(f).as_dict()
        if f.n >= 2:
            reports.append(report("kkl", f, args.s0))
            if not f.is_constant():
                bundle["alternative"] = corollary_alternative_report(f, args.s0).to_dict()
    if args.format == "csv":
        _emit(dump_csv(CSV_COLUMNS, [r.csv_row() for r in reports]), args.out)
    else:
        bundle["reports"] = [r.to_dict() for r in reports]
        _emit(dump_json(bundle), args.out)
    return EXIT_OK


def _sweep_dims(name: str, params: dict, metric: str, lo: int, hi: int) -> list[int]:
    if metric in CLOSED_FORM_METRICS:
        if name not in ("tribes-auto", "tribes"):
            raise UsageError(f"metric {metric} is defined for tribes families only")
        if hi > CLOSED_FORM_MAX_N:
            raise CapacityError(f"closed-form sweeps stop at n = 2^20, got {hi}")
        return [1 << e for e in range(1, 21) if lo <= 1 << e <= hi]
    dims = range(max(lo, 2 if metric == "kkl" else 1), hi + 1)
    if name == "majority":
        return [n for n in dims if n % 2]
    if name == "tribes-auto":
        return [n for n in dims if n >= 4]
    if name == "tribes":
        return [n for n in dims if n >= params["k"] * params["m"]]
    return list(dims)


def _closed_form_row(name: str, params: dict, metric: str, n: int) -> list:
    if name == "tribes":
        k, m = params["k"], params["m"]
    else:
        k, m = choose_tribes_params(n)
    scale = math.log2(n) / n
    if metric == "influence-closed-form":
        lhs, rhs = tribes_influence_closed_form(k, m), scale
    else:
        if m < 2:
            raise UsageError("pair influence across blocks needs m >= 2")
        lhs, rhs = tribes_pair_influence_closed_form(k, m, same_block=False), scale * scale
    return [metric, n, "", float(lhs), rhs, float(lhs) / rhs, k, m, tribes_mean(k, m)]


def cmd_sweep(args) -> int:
    if not args.family:
        raise UsageError("sweep needs --family")
    name, params = parse_family_spec(args.family)
    if name == "random" and "seed" not in params:
        params["seed"] = args.seed
    spec = args.family if name != "random" else "random:" + ",".join(f"{k}={v}" for k, v in sorted(params.items()))
    metric = args.metric
    valid = CLOSED_FORM_METRICS + INEQUALITIES
    if metric not in valid:
        raise UsageError(f"unknown metric {metric!r}; choose from {', '.join(valid)}")
    lo = args.n_min if args.n_min is not None else (16 if metric in CLOSED_FORM_METRICS else 1)
    hi = args.n_max if args.n_max is not None else (CLOSED_FORM_MAX_N if metric in CLOSED_FORM_METRICS else 10)
    if lo > hi:
        raise UsageError(f"--n-min {lo} exceeds --n-max {hi}")
    rows = []
    for n in _sweep_dims(name, params, metric, lo, hi):
        if metric in CLOSED_FORM_METRICS:
            rows.append(_closed_form_row(name, params, metric, n))
        else:
            f = majority(n) if name == "majority" else build_family(spec, n)
            rows.append(report(metric, f, args.s0).csv_row())
    columns = CSV_COLUMNS + SWEEP_EXTRA_COLUMNS.get(metric, [])
    if args.format == "json":
        _emit(dump_json({"family": spec, "metric": metric,
                         "rows": [dict(zip(columns, r)) for r in rows]}), args.out)
    else:
        _emit(dump_csv(columns, rows), args.out)
    return EXIT_OK


def _reproduction(args) -> str:
    cmd = f"cubeharmonic verify {args.suite} --n-max {args.n_max} --seed {args.seed} --s0 {args.s0!r}"
    if args.table:
        cmd += f" --table {args.table}"
    return cmd


def cmd_verify(args) -> int:
    table = load_table(args.table) if args.table else None
    results = run_suite(args.suite, args.n_max, args.seed, table, args.s0)
    failed = [r for r in results if not r.passed]
    if args.format == "json":
        doc = {"suite": args.suite, "seed": args.seed, "n_max": args.n_max,
               "passed": not failed, "checks": [r.to_dict() for r in results]}
        if failed:
            doc["reproduce"] = _reproduction(args)
        text = dump_json(doc)
    elif args.format == "csv":
        text = dump_csv(["name", "passed", "cases", "failures", "worst", "tol"],
                        [[r.name, r.passed, r.cases, r.failures, r.worst, r.tol] for r in results])
    else:
        lines = [r.summary() for r in results]
        lines.append(f"{len(results) - len(failed)}/{len(results)} checks passed, "
                     f"{sum(r.cases for r in results)} cases")
        if failed:
            lines.append(f"reproduce: {_reproduction(args)}")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return EXIT_FAILED if failed else EXIT_OK


def cmd_search(args) -> int:
    res = constant_search(args.inequality, args.n, args.budget, args.seed, args.s0)
    if args.witness:
        Path(args.witness).write_text(format_truth_table(res.best))
    if args.format == "csv":
        cols = ["inequality", "n", "seed", "budget", "best_ratio", "evaluations", "restarts", "best_table"]
        d = res.to_dict()
        _emit(dump_csv(cols, [[d[c] for c in cols]]), args.out)
    else:
        _emit(dump_json(res.to_dict()), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--s0", type=float, default=DEFAULT_S0,
                        help="second-order time parameter in (0, 1/128) (default 1/256)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--config", help="key=value file of defaults; flags override it")

    p = _Parser(prog="cubeharmonic", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", parents=[common], help="influences and inequality reports for one function")
    a.add_argument("--family", help="family string, e.g. tribes:k=2,m=2 or dictator:i=1")
    a.add_argument("--table", help="truth-table or real-table file")
    a.add_argument("--n", type=int, help="dimension for families that need one")
    a.set_defaults(func=cmd_analyze, format_default="json")

    s = sub.add_parser("sweep", parents=[common], help="one CSV row per dimension")
    s.add_argument("--family", help="family string")
    s.add_argument("--metric", default="influence-closed-form",
                   help=f"one of {', '.join(CLOSED_FORM_METRICS + INEQUALITIES)}")
    s.add_argument("--n-min", type=int)
    s.add_argument("--n-max", type=int)
    s.set_defaults(func=cmd_sweep, format_default="csv")

    v = sub.add_parser("verify", parents=[common], help="run verification batteries")
    v.add_argument("suite", choices=("identities", "inequalities", "gaussian", "all"))
    v.add_argument("--n-max", type=int, default=8)
    v.add_argument("--table", help="extra table to run through the inequality battery")
    v.set_defaults(func=cmd_verify, format_default=None)  # plain-text summary

    c = sub.add_parser("search", parents=[common], help="search for a large lhs/rhs ratio")
    c.add_argument("inequality", choices=INEQUALITIES)
    c.add_argument("--n", type=int, default=6)
    c.add_argument("--budget", type=int, default=10_000)
    c.add_argument("--witness", help="write the best truth table here")
    c.set_defaults(func=cmd_search, format_default="json")
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cfg = read_config(known.config)
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    dests = {act.dest for sp in sub.choices.values() for act in sp._actions}
    unknown = sorted(set(cfg) - dests - {"config"})
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
    for sp in sub.choices.values():
        own = {act.dest for act in sp._actions}
        sp.set_defaults(**{k: v for k, v in cfg.items() if k in own})


def main(argv: list | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        if args.format is None:
            args.format = args.format_default
        return args.func(args)
    except CapacityError as e:
        print(f"capacity error: {e}", file=sys.stderr)
        return EXIT_CAPACITY
    except (UsageError, ValueError, IndexError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except AssertionError as e:
        print(f"verification failure: {e}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
