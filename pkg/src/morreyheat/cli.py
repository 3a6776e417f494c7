"""Command-line front end.

Exit status: 0 on a passing verdict or a successful computation, 1 on a
failing verdict, 2 on a usage or input error (one-line diagnostic on stderr).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from typing import Optional

import numpy as np

from . import functions as fn
from . import heat, spaces, verify
from .errors import MorreyHeatError
from .scaling import INF, SpaceParams, admissibility_window, fine_index

PROG = "morreyheat"

SPACES = ("lebesgue", "weak", "lorentz", "morrey", "local-morrey-type", "global-morrey-type")


class UsageError(Exception):
    def __init__(self, flag: str, message: str):
        super().__init__(f"{flag}: {message}" if flag else message)
        self.flag = flag


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError("", message)


# argument types ---------------------------------------------------------------


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _nonneg(text):
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text}")
    return v


def _dimension(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def _fine(text):
    try:
        return fine_index(text)
    except (ValueError, MorreyHeatError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            a, b = part.split("..")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def _point(text):
    return tuple(_float_list(text))


# parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--output", "-o", help="write the result here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    tol = _Parser(add_help=False)
    defaults = verify.Settings()
    for name in ("ratio_tol", "slope_tol", "upper_slack", "morrey_change", "weak_tol",
                 "identity_closed_tol", "identity_quad_tol", "embedding_spread"):
        tol.add_argument("--" + name.replace("_", "-"), type=_positive, default=getattr(defaults, name),
                         help=f"threshold (default {getattr(defaults, name)})")
    tol.add_argument("--workers", type=int, default=1, help="parallel workers for t/gamma grids")

    p = _Parser(prog=PROG, description="Heat smoothing in Morrey, Lorentz and Morrey-type spaces.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("norm", parents=[common], help="norm of a function")
    s.add_argument("--space", choices=SPACES, required=True)
    s.add_argument("--input", required=True, help="function JSON (inline or file path)")
    s.add_argument("--n", type=_dimension, help="dimension for variants that need it")
    s.add_argument("--p", type=_positive, required=True)
    s.add_argument("--q", type=_positive, default=1.0)
    s.add_argument("--r", type=_fine, default=INF, help='fine index, number >= 1 or "inf"')

    s = sub.add_parser("heat", parents=[common], help="evaluate or measure a heat field")
    s.add_argument("--input", required=True)
    s.add_argument("--n", type=_dimension)
    s.add_argument("--t", type=_positive, required=True)
    s.add_argument("--gamma", type=_nonneg, default=0.0)
    s.add_argument("--k", type=int, default=0, choices=(0, 1))
    s.add_argument("--alpha", default="0", help="multi-index like 1,0,0 or a single order")
    s.add_argument("--x", type=_point, action="append", default=[], help="evaluation point, e.g. 0,0,1")
    s.add_argument("--target", help="norm target: lebesgue:S, weak:S or lorentz:S,R")
    s.add_argument("--backend", default="auto", choices=("auto",) + heat.BACKENDS)

    s = sub.add_parser("verify-smoothing", parents=[common, tol], help="decay-exponent experiment")
    _space_flags(s, need_s=True)
    s.add_argument("--gamma", type=_nonneg, required=True)
    s.add_argument("--k", type=int, default=0, choices=(0, 1))
    s.add_argument("--alpha-order", type=int, default=0, choices=(0, 1, 2))
    s.add_argument("--input", help="source JSON; default |x|^{-n/p}")
    s.add_argument("--t-grid", type=_float_list, help="comma-separated times")
    s.add_argument("--target", help="override the norm target (lebesgue:S, weak:S, lorentz:S,R)")

    s = sub.add_parser("verify-identity", parents=[common, tol], help="origin identity check")
    s.add_argument("--n", type=_dimension)
    s.add_argument("--p", type=_positive, required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--route", choices=("closed", "quadrature"), default="closed")

    s = sub.add_parser("counterexample", parents=[common, tol], help="spaced-balls experiment")
    _space_flags(s)
    s.add_argument("--J", type=_int_list, default=list(range(2, 7)), help="orders, e.g. 2..6 or 2,4,6")

    s = sub.add_parser("scan", parents=[common, tol], help="admissibility scan over gamma")
    _space_flags(s, need_s=True)
    s.add_argument("--gammas", type=_float_list, required=True)

    s = sub.add_parser("embedding", parents=[common, tol], help="Lorentz to Morrey-type spot check")
    _space_flags(s)
    s.add_argument("--r", type=_fine, default=INF)
    s.add_argument("--input", action="append", help="function JSON; repeatable; default corpus")
    return p


def _space_flags(s, need_s: bool = False):
    s.add_argument("--n", type=_dimension, required=True)
    s.add_argument("--p", type=_positive, required=True)
    s.add_argument("--q", type=_positive, required=True)
    if need_s:
        s.add_argument("--s", type=_positive, required=True)


# helpers -----------------------------------------------------------------------


def _load_function(text: str, n: Optional[int]):
    try:
        if text.lstrip().startswith("{"):
            obj = json.loads(text)
        elif text == "-":
            obj = json.load(sys.stdin)
        elif os.path.exists(text):
            with open(text) as fh:
                obj = json.load(fh)
        else:
            raise UsageError("--input", f"neither JSON nor an existing file: {text!r}")
    except json.JSONDecodeError as exc:
        raise UsageError("--input", f"invalid JSON ({exc.msg} at position {exc.pos})") from None
    try:
        return fn.from_json(obj, n)
    except MorreyHeatError as exc:
        raise UsageError("--input", str(exc)) from None


def _params(args, **extra) -> SpaceParams:
    data = {"n": args.n, "p": args.p, "q": getattr(args, "q", 1.0)}
    for key in ("s", "gamma", "k"):
        if hasattr(args, key):
            data[key] = getattr(args, key)
    if hasattr(args, "alpha_order"):
        data["alpha_order"] = args.alpha_order
    data.update(extra)
    try:
        return SpaceParams(**data)
    except MorreyHeatError as exc:
        msg = str(exc)
        flag = next((f"--{k}" for k in ("gamma", "p", "q", "r", "s", "n") if msg.startswith(k) or f"({k}=" in msg), "")
        raise UsageError(flag, msg) from None


def _settings(args) -> verify.Settings:
    kw = {name: getattr(args, name) for name in (
        "ratio_tol", "slope_tol", "upper_slack", "morrey_change", "weak_tol",
        "identity_closed_tol", "identity_quad_tol", "embedding_spread", "workers") if hasattr(args, name)}
    return verify.Settings(**kw)


def _emit(args, text: str):
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _emit_report(args, report: verify.Report) -> int:
    _emit(args, report.to_csv() if args.format == "csv" else report.to_json())
    return 1 if report.verdict == verify.FAIL else 0


def _emit_record(args, record: dict, columns):
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        rows = record.get("rows") or [record]
        for row in rows:
            w.writerow([_cell(row[c]) for c in columns])
        _emit(args, buf.getvalue())
    else:
        _emit(args, json.dumps(verify._jsonable(record), indent=2))


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return verify._fmt(v)
    return "" if v is None else v


# commands ----------------------------------------------------------------------


def cmd_norm(args) -> int:
    f = _load_function(args.input, args.n)
    p, q, r = args.p, args.q, args.r
    if args.space == "lebesgue":
        v = spaces.lebesgue_norm(f, p)
    elif args.space == "weak":
        v = spaces.weak_lebesgue_norm(f, p)
    elif args.space == "lorentz":
        v = spaces.lorentz_norm(f, p, r)
    elif args.space == "morrey":
        v = spaces.morrey_norm(f, p, q)
    elif args.space == "local-morrey-type":
        v = spaces.local_morrey_type_norm(f, p, q, r)
    else:
        v = spaces.global_morrey_type_norm(f, p, q, r)
    record = {"space": args.space, "settings": {"p": p, "q": q, "r": r}, "input": fn.to_json(f),
              "value": v.value, "error": v.error, "method": v.method,
              "witness": list(v.sup_witness) if v.sup_witness else None}
    _emit_record(args, record, ["value", "error", "method"])
    return 0


def cmd_heat(args) -> int:
    f = _load_function(args.input, args.n)
    n = fn.dim(f)
    alpha = [int(a) for a in args.alpha.split(",")]
    alpha = alpha[0] if len(alpha) == 1 else tuple(alpha)
    field = heat.apply_weighted_heat(f, args.gamma, args.t, args.k, alpha, backend=args.backend)
    record = {"settings": {"t": args.t, "gamma": args.gamma, "k": args.k, "alpha": list(field.alpha),
                           "backend": field.backend},
              "input": fn.to_json(f), "rows": []}
    for x in args.x:
        if len(x) != n:
            raise UsageError("--x", f"point {x} has dimension {len(x)}, expected {n}")
        record["rows"].append({"x": list(x), "value": field(np.array(x))})
    if args.target:
        try:
            target = heat.Target.parse(args.target)
        except (MorreyHeatError, ValueError) as exc:
            raise UsageError("--target", str(exc)) from None
        v = heat.heat_norm(field, target)
        record["norm"] = {"target": args.target, "value": v.value, "error": v.error, "method": v.method}
    if not args.x and not args.target:
        raise UsageError("--x", "give at least one --x point or a --target norm")
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "value"])
        for row in record["rows"]:
            w.writerow([" ".join(verify._fmt(c) for c in row["x"]), verify._fmt(row["value"])])
        if "norm" in record:
            w.writerow([record["norm"]["target"], verify._fmt(record["norm"]["value"])])
        _emit(args, buf.getvalue())
    else:
        _emit(args, json.dumps(verify._jsonable(record), indent=2))
    return 0


def cmd_verify_smoothing(args) -> int:
    params = _params(args)
    window = admissibility_window(params)
    if not window.admissible:
        raise UsageError("--gamma", f"inadmissible parameters: {params.gamma} outside ({window.lower:.6g}, {window.upper:.6g})")
    f = _load_function(args.input, args.n) if args.input else fn.RadialPower(args.n / args.p, args.n)
    settings = _settings(args)
    target = None
    if args.target:
        try:
            target = heat.Target.parse(args.target)
        except (MorreyHeatError, ValueError) as exc:
            raise UsageError("--target", str(exc)) from None
    report = verify.run_decay_experiment(f, params, args.t_grid, settings, target)
    return _emit_report(args, report)


def cmd_verify_identity(args) -> int:
    f = _load_function(args.input, args.n)
    if args.n is not None and fn.dim(f) != args.n:
        raise UsageError("--n", f"input has dimension {fn.dim(f)}, not {args.n}")
    if not args.p > 1:
        raise UsageError("--p", f"must exceed 1, got {args.p}")
    return _emit_report(args, verify.check_identity_lemma(f, args.p, _settings(args), args.route))


def cmd_counterexample(args) -> int:
    if not 1 <= args.q < args.p:
        raise UsageError("--q", f"need 1 <= q < p, got q={args.q}, p={args.p}")
    if not args.J or min(args.J) < 0:
        raise UsageError("--J", "needs non-negative orders")
    return _emit_report(args, verify.run_counterexample(args.J, args.p, args.q, args.n, _settings(args)))


def cmd_scan(args) -> int:
    _params(args)
    report = verify.scan_region(args.n, args.p, args.q, args.s, args.gammas, _settings(args))
    if args.format == "csv":
        _emit_record(args, report.details, ["gamma", "admissible", "theoretical", "slope"])
        return 1 if report.verdict == verify.FAIL else 0
    return _emit_report(args, report)


def cmd_embedding(args) -> int:
    _params(args)
    if not args.q < args.p:
        raise UsageError("--q", f"embedding needs q < p, got q={args.q}, p={args.p}")
    corpus = [_load_function(t, args.n) for t in args.input] if args.input else verify.embedding_corpus(args.n, args.p)
    return _emit_report(args, verify.check_embedding(corpus, args.p, args.q, args.r, _settings(args)))


COMMANDS = {
    "norm": cmd_norm, "heat": cmd_heat, "verify-smoothing": cmd_verify_smoothing,
    "verify-identity": cmd_verify_identity, "counterexample": cmd_counterexample,
    "scan": cmd_scan, "embedding": cmd_embedding,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    except MorreyHeatError as exc:
        print(f"{PROG}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
