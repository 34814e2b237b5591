"""Command-line front end: ``amalgam-lab {norm,weight,apply,verify,corpus}``.

Exit status: 0 on success, 2 on a usage error (argparse names the offending
token), 1 on a computation error or a failed hypothesis; in the latter case the
structured report is still written. All files are written atomically.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

from . import awg
from .corpus import corpus_members
from .errors import LabError
from .grid import BallFamily, Grid, dyadic_radii, make_family
from .norms import (
    NORM_CSV_COLUMNS,
    ExponentSet,
    amalgam_norm,
    amalgam_norm_at_r,
    bmo_norm,
    lp_norm,
    morrey_norm,
    weak_amalgam_norm,
    weak_norm,
)
from .operators import apply, parse_operator, set_fft_workers
from .verify import Scenario, ratio_study
from .weights import aq_refinement, calibrate_reverse_holder, doubling_check, parse_weight

GROWTH_LIMIT = 1.25


def _typed(parser_fn, what):
    def conv(text):
        try:
            return parser_fn(text)
        except LabError as exc:
            raise argparse.ArgumentTypeError(f"invalid {what} {text!r} ({exc.code})") from exc
    conv.__name__ = what
    return conv


def _exponent(text):
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid exponent {text!r}") from exc


def _threads(value):
    if value is None:
        env = os.environ.get("AMALGAM_LAB_THREADS")
        if env:
            try:
                value = int(env)
            except ValueError:
                raise LabError("usage-error", f"AMALGAM_LAB_THREADS={env!r} is not an integer")
    if value is not None and value < 1:
        raise LabError("usage-error", f"--threads {value} must be >= 1")
    return value


def _write_text(path, text):
    awg.atomic_write_bytes(path, text.encode("utf-8"))


def _csv_text(rows, columns):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def _grid_from_args(args):
    return Grid(args.n, args.L, args.N)


# --- verbs ---------------------------------------------------------------------


def cmd_norm(args):
    f = awg.load(args.input)
    g = f.grid
    w = args.weight
    radii = dyadic_radii(g, 0, args.kmax)
    if args.kind == "lp":
        v = lp_norm(f, w, args.q)
    elif args.kind == "weak":
        v = weak_norm(f, w, args.q)
    elif args.kind == "morrey":
        if args.kappa is None:
            raise LabError("usage-error", "--kind morrey needs --kappa")
        v = morrey_norm(f, w, args.q, args.kappa, BallFamily(g, radii, args.stride))
    elif args.kind == "bmo":
        v = bmo_norm(f, make_family(g, args.stride, 0, args.kmax), args.variant,
                     q=args.q if args.variant != "mean" else None,
                     w=w if args.variant == "weighted" else None)
    else:
        e = ExponentSet(args.q, args.p, args.alpha, kappa=args.kappa)
        if args.kind == "amalgam_r":
            if args.r is None:
                raise LabError("usage-error", "--kind amalgam_r needs --r")
            v = amalgam_norm_at_r(f, w, e, args.r)
        elif args.kind == "amalgam":
            v = amalgam_norm(f, w, e, radii)
        else:
            v = weak_amalgam_norm(f, w, e, radii)
    print(repr(float(v.value)))
    out = args.output or os.path.splitext(args.input)[0] + "_norm.csv"
    _write_text(out, _csv_text([v.row()], NORM_CSV_COLUMNS))
    return 0


def cmd_weight(args):
    w = args.weight
    grid = _grid_from_args(args)
    if w.kind == "sampled":
        grid = w.data.grid
    report = {"weight": w.spec, "check": args.check, "grid": {"n": grid.n, "L": grid.L, "N": grid.N}}
    status = 0
    if args.check == "a_q":
        est, growth = aq_refinement(w, args.q, grid, levels=args.refine)
        ok = all(math.isfinite(x) for x in est) and all(g <= GROWTH_LIMIT for g in growth)
        report.update(q=args.q, estimates=[float(x) for x in est], growth=[float(x) for x in growth],
                      growth_limit=GROWTH_LIMIT, status="pass" if ok else "hypothesis-violation")
        status = 0 if ok else 1
    elif args.check == "doubling":
        val = doubling_check(w, args.q, args.lam, make_family(grid))
        report.update(q=args.q, **{"lambda": args.lam}, value=float(val), status="pass")
    else:
        gamma, ratio = calibrate_reverse_holder(w, make_family(grid), threshold=args.threshold)
        report.update(gamma=gamma, ratio=ratio, threshold=args.threshold,
                      status="pass" if gamma is not None else "hypothesis-violation")
        status = 0 if gamma is not None else 1
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    _write_text(args.output, text)
    sys.stdout.write(text)
    return status


def cmd_apply(args):
    f = awg.load(args.input)
    g = apply(args.operator, f, eps=args.eps, pad=args.pad)
    if g.is_complex:
        raise LabError("io-error", "complex output cannot be stored as AWG1")
    awg.save(args.output, g)
    return 0


def cmd_verify(args):
    s = Scenario.load(args.scenario)
    if args.seed is not None:
        s.seed = args.seed
    rep = ratio_study(s, threads=args.threads, refine=not args.no_refine, enlarge=not args.no_enlarge)
    out = args.output or s.output or os.path.splitext(args.scenario)[0] + "_report.json"
    if not os.path.isabs(out) and args.output is None and s.output:
        out = os.path.join(os.path.dirname(os.path.abspath(args.scenario)), out)
    rep.write(out)
    sys.stdout.write(rep.to_json())
    return 0 if rep.status == "pass" else 1


def cmd_corpus(args):
    spec = args.generators
    if os.path.exists(spec):
        with open(spec, encoding="utf-8") as fh:
            spec = fh.read()
    try:
        spec = json.loads(spec)
    except json.JSONDecodeError as exc:
        raise LabError("usage-error", f"--generators is not JSON: {exc}") from exc
    grid = _grid_from_args(args)
    members = corpus_members(spec, args.seed, grid.n, grid.L)
    rows = []
    for i, m in enumerate(members):
        name = f"member_{i:03d}.awg"
        f = m.on(grid)
        awg.save(os.path.join(args.outdir, name), f)
        rows.append({"index": i, "file": name, "label": m.label, "kind": m.kind})
    _write_text(os.path.join(args.outdir, "index.csv"), _csv_text(rows, ["index", "file", "label", "kind"]))
    print(len(members))
    return 0


# --- parser --------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="amalgam-lab", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=None, help="worker cap (fallback: AMALGAM_LAB_THREADS)")
    sub = p.add_subparsers(dest="verb", required=True)
    weight = _typed(parse_weight, "weight")
    operator = _typed(parse_operator, "operator")

    def grid_opts(sp):
        sp.add_argument("--n", type=int, default=1, choices=(1, 2))
        sp.add_argument("--L", type=float, default=8.0)
        sp.add_argument("--N", type=int, default=256)

    sp = sub.add_parser("norm", help="compute a norm of an AWG1 grid function")
    sp.add_argument("--kind", required=True,
                    choices=("lp", "weak", "morrey", "amalgam", "amalgam_r", "weak_amalgam", "bmo"))
    sp.add_argument("--input", required=True)
    sp.add_argument("--q", type=_exponent, default=2.0)
    sp.add_argument("--p", type=_exponent, default=math.inf)
    sp.add_argument("--alpha", type=_exponent, default=None)
    sp.add_argument("--kappa", type=float, default=None)
    sp.add_argument("--r", type=float, default=None)
    sp.add_argument("--kmax", type=int, default=None, help="largest dyadic radius 2^kmax h")
    sp.add_argument("--stride", type=int, default=1)
    sp.add_argument("--variant", choices=("mean", "q-power", "weighted"), default="mean")
    sp.add_argument("--weight", type=weight, default=parse_weight("const:1"))
    sp.add_argument("--output", default=None, help="norm CSV (default: <input>_norm.csv)")
    sp.set_defaults(func=cmd_norm)

    sp = sub.add_parser("weight", help="Muckenhoupt-class diagnostics of a weight")
    sp.add_argument("--check", required=True, choices=("a_q", "doubling", "reverse_holder"))
    sp.add_argument("--weight", type=weight, required=True)
    sp.add_argument("--q", type=float, default=2.0)
    sp.add_argument("--refine", type=int, default=1)
    sp.add_argument("--lam", type=float, default=2.0)
    sp.add_argument("--threshold", type=float, default=2.0)
    sp.add_argument("--output", default="weight_report.json")
    grid_opts(sp)
    sp.set_defaults(func=cmd_weight)

    sp = sub.add_parser("apply", help="apply an operator to an AWG1 grid function")
    sp.add_argument("--operator", type=operator, required=True)
    sp.add_argument("--input", required=True)
    sp.add_argument("--output", required=True)
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--pad", type=int, default=2)
    sp.set_defaults(func=cmd_apply)

    sp = sub.add_parser("verify", help="run a theorem scenario")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--output", default=None, help="JSON summary path; the CSV goes beside it")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--no-refine", action="store_true")
    sp.add_argument("--no-enlarge", action="store_true")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("corpus", help="write a seeded corpus as AWG1 files")
    sp.add_argument("--generators", required=True, help="JSON text or path to a JSON file")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--outdir", required=True)
    grid_opts(sp)
    sp.set_defaults(func=cmd_corpus)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.threads = _threads(args.threads)
        if args.threads is not None:
            set_fft_workers(args.threads)
        return args.func(args)
    except LabError as exc:
        print(f"amalgam-lab: error: {exc}", file=sys.stderr)
        return 2 if exc.code == "usage-error" else 1


if __name__ == "__main__":
    sys.exit(main())
