"""Command-line entry point: ``symflow <subcommand> ...``.

Machine-readable output goes to stdout (or ``--out``); summaries and logs go
to stderr.  Exit codes: 0 all verified or informational, 1 an unresolved
discrepancy, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from fractions import Fraction

import numpy as np

from . import catalog as cat
from . import exprcore as ec
from . import flows as fl
from . import moc
from . import symmetry as sym
from . import verify as vf
from .audit import audit, grid_csv
from .errors import SymflowError
from .family import CONDITIONS, CaseId, PdeParams, classify, params_for_case, to_rational

log = logging.getLogger("symflow")

EXIT_OK, EXIT_DISCREPANT, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _default_seed() -> int:
    raw = os.environ.get("SYMFLOW_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"SYMFLOW_SEED must be an integer, got {raw!r}") from None


def _rational(text: str) -> Fraction:
    try:
        return to_rational(text)
    except SymflowError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_params(p: argparse.ArgumentParser, case: bool = True, case_required: bool = False) -> None:
    if case:
        p.add_argument("--case", type=int, choices=range(1, 8), required=case_required,
                       help="symmetry class; a missing k or m is completed from its condition")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="damping strength (default 1)")
    p.add_argument("--k", type=_rational, default=None, help="flux exponent, p/q or decimal")
    p.add_argument("--m", type=_rational, default=None, help="damping exponent, p/q or decimal")
    p.add_argument("--params", default=None, help='alternative form: "lambda=1,k=2,m=3"')


def _add_common(p: argparse.ArgumentParser, tol: bool = True) -> None:
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default $SYMFLOW_SEED or 0)")
    if tol:
        p.add_argument("--tol", type=float, default=None, help="override the check's default tolerance")
    p.add_argument("--out", default=None, help="write the payload here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                   help="worker threads for verification sweeps (default: all cores)")


def _parse_params_string(text: str) -> dict:
    out = {}
    for part in text.split(","):
        if not part.strip():
            continue
        if "=" not in part:
            raise UsageError(f"--params entries look like name=value, got {part!r}")
        name, value = (s.strip() for s in part.split("=", 1))
        name = {"lam": "lambda", "λ": "lambda"}.get(name, name)
        if name not in ("lambda", "k", "m"):
            raise UsageError(f"unknown parameter {name!r} in --params")
        out[name] = value
    return out


def _params(args) -> PdeParams:
    given = _parse_params_string(args.params) if getattr(args, "params", None) else {}
    lam = args.lam if args.lam is not None else float(given.get("lambda", 1.0))
    k = args.k if args.k is not None else (to_rational(given["k"]) if "k" in given else None)
    m = args.m if args.m is not None else (to_rational(given["m"]) if "m" in given else None)
    case = getattr(args, "case", None)
    if case is not None:
        return params_for_case(case, lam, k, m)
    if k is None or m is None:
        raise UsageError("give --k and --m (or --case with one of them)")
    return PdeParams(lam, k, m)


def _seed(args) -> int:
    return args.seed if args.seed is not None else _default_seed()


def _emit(args, payload, csv_rows: list[list] | None = None) -> None:
    if getattr(args, "format", "json") == "csv":
        if csv_rows is None:
            raise UsageError(f"{args.command} has no CSV form")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for row in csv_rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
        text = buf.getvalue()
    else:
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=_json_default) + "\n"
    out = getattr(args, "out", None)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_default(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(type(v))


def _finite(v):
    v = float(v)
    return v if np.isfinite(v) else None


# -- subcommands -----------------------------------------------------------------------

def cmd_classify(args) -> int:
    k, m = args.k, args.m
    if k is None or m is None:
        raise UsageError("classify needs --k and --m")
    case = classify(k, m)
    _emit(args, {"case": int(case), "condition": CONDITIONS[case]})
    print(f"k={k}, m={m}: case {int(case)} ({CONDITIONS[case]})", file=sys.stderr)
    return EXIT_OK


def cmd_generators(args) -> int:
    p = _params(args)
    case = args.case or int(p.case)
    gs = sym.generators(case, p, args.variant)
    rows = [["label", "xi", "tau", "phi", "source"]] + [
        [f.label, ec.to_text(f.xi), ec.to_text(f.tau), ec.to_text(f.phi), f.source] for f in gs.fields]
    _emit(args, {"case": case, "params": p.as_dict(), "variant": args.variant,
                 "generators": [f.to_dict() for f in gs.fields]}, rows)
    return EXIT_OK


def cmd_check_symmetry(args) -> int:
    p = _params(args)
    case = args.case or int(p.case)
    seed = _seed(args)
    tol = args.tol if args.tol is not None else sym.DEFAULT_TOL
    checks = sym.check_generators(case, p, n_states=args.states, seed=seed, tol=tol, variant=args.variant)
    fixed = {c.label: c for c in sym.check_generators(case, p, n_states=args.states, seed=seed, tol=tol)}
    entries, unresolved = [], 0
    for c in checks:
        d = {"label": c.label, "source": c.source, "max_scaled": _finite(c.max_scaled), "verified": c.verified}
        if c.note:
            d["note"] = c.note
        if not c.verified:
            if fixed[c.label].verified and fixed[c.label].source == "corrected":
                d["resolved_by"] = f"{c.label} (corrected)"
            else:
                unresolved += 1
        entries.append(d)
    _emit(args, {"case": case, "params": p.as_dict(), "seed": seed, "tol": tol, "states": args.states,
                 "variant": args.variant, "generators": entries},
          [["label", "source", "max_scaled", "verified"]]
          + [[e["label"], e["source"], e["max_scaled"], e["verified"]] for e in entries])
    n_ok = sum(e["verified"] for e in entries)
    print(f"case {case}: {n_ok}/{len(entries)} generators pass at tol {tol:g}", file=sys.stderr)
    return EXIT_DISCREPANT if unresolved else EXIT_OK


def cmd_bracket_table(args) -> int:
    p = _params(args)
    case = args.case or int(p.case)
    seed = _seed(args)
    tol = args.tol if args.tol is not None else sym.DEFAULT_TOL
    rep = sym.verify_commutator_table(case, p, n_samples=args.samples, tol=tol, seed=seed, table=args.table)
    unresolved = rep.mismatched
    if unresolved and args.table == "printed":
        fixed = sym.verify_commutator_table(case, p, n_samples=args.samples, tol=tol, seed=seed,
                                            table="corrected")
        unresolved = fixed.mismatched
    payload = rep.to_dict()
    payload.update({"seed": seed, "tol": tol, "table": args.table})
    rows = [["i", "j", "expected", "match", "max_dev"]] + [
        [c.i, c.j, c.expected, c.match, c.max_dev] for c in rep.cells]
    _emit(args, payload, rows)
    print(f"case {case}: {rep.n_match}/{len(rep.cells)} cells match"
          + (f"; mismatched {rep.mismatched}" if rep.mismatched else ""), file=sys.stderr)
    return EXIT_DISCREPANT if unresolved else EXIT_OK


def _point(text: str) -> tuple[float, float, float]:
    try:
        x, t, u = (float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"--point expects x,t,u, got {text!r}") from None
    return x, t, u


def cmd_flow(args) -> int:
    p = _params(args)
    case = args.case or int(p.case)
    G = fl.group_map(case, args.index, p, args.variant)
    payload = {"map": G.to_dict(), "params": p.as_dict(), "eps": args.eps}
    status = EXIT_OK
    if args.point:
        pt = _point(args.point)
        payload["point"] = list(pt)
        payload["image"] = [_finite(v) for v in G.apply_array(*pt, args.eps, strict=False)]
        X_ = sym.generators(case, p)[args.index]
        try:
            payload["flow_image"] = list(fl.exponentiate(X_, pt, args.eps))
        except SymflowError as exc:
            payload["flow_image"] = None
            payload["flow_note"] = str(exc)
    if args.check:
        rng = np.random.default_rng(_seed(args))
        pts = np.stack([rng.uniform(*sym.BOX[k], 12) for k in ("x", "t", "u")], axis=1)
        eps_grid = np.linspace(-abs(args.eps), abs(args.eps), 9) if args.eps else np.linspace(-0.2, 0.2, 9)
        tol = args.tol if args.tol is not None else 1e-8
        chk = fl.flow_agreement(case, args.index, p, pts, eps_grid, args.variant, tol)
        payload["check"] = {"max_dev": _finite(chk.max_dev), "verified": chk.verified, "tol": tol, **chk.detail}
        if not chk.verified:
            status = EXIT_DISCREPANT
    _emit(args, payload)
    return status


def cmd_pushforward(args) -> int:
    p = _params(args)
    case = args.case or int(p.case)
    phi = fl.solution(ec.from_text(args.solution))
    if args.printed_formula:
        new = fl.theorem_formula(case, args.index, p, args.eps, phi)
    else:
        try:
            G = fl.group_map(case, args.index, p, args.variant)
            new = fl.pushforward(G, args.eps, phi, args.convention)
        except SymflowError:
            new = None
    payload = {"case": case, "params": p.as_dict(), "index": args.index, "eps": args.eps,
               "convention": args.convention, "seed_solution": ec.to_text(phi.expr)}
    status = EXIT_OK
    if new is None:
        payload["u"] = None
        payload["note"] = f"no closed form for G{args.index}; evaluate numerically with the Python API"
    else:
        payload["u"] = ec.to_text(new.expr)
        if args.verify:
            rep = vf.residual_explicit(new.expr, p, seed=_seed(args),
                                       tol=args.tol if args.tol is not None else vf.TOL_EXPLICIT)
            payload["residual"] = rep.to_dict()
            if rep.verdict == vf.DISCREPANT:
                status = EXIT_DISCREPANT
    _emit(args, payload)
    return status


def _catalog_items(case, p, args) -> list[dict]:
    kind = args.kind
    items = []
    if kind in ("all", "solutions"):
        items += [s.to_dict() for s in cat.all_entries(case, p)]
    if kind in ("all", "reductions"):
        items += [r.to_dict() for r in cat.reductions(case, p)]
    if kind in ("all", "travelling-waves"):
        items += [f.to_dict() for f in cat.travelling_wave_forms(case, p, args.c)]
    return sorted(items, key=lambda d: d["id"])


def cmd_catalog(args) -> int:
    p = _params(args)
    case = args.case or int(p.case)
    items = _catalog_items(case, p, args)
    rows = [["id", "kind", "expression", "source"]] + [
        [d["id"], d.get("kind", "reduction"), d["ode"] if "ode" in d else d.get("u", d.get("relation")),
         d.get("source", "printed")]
        for d in items]
    _emit(args, {"case": case, "params": p.as_dict(), "entries": items}, rows)
    print(f"case {case}: {len(items)} entries", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    p = _params(args)
    case = args.case or int(p.case)
    seed = _seed(args)
    forms = cat.all_entries(case, p) + cat.travelling_wave_forms(case, p, args.c)
    if args.entry:
        forms = [f for f in forms if f.id == args.entry]
        if not forms:
            raise UsageError(f"no entry {args.entry!r} in case {case}")
    reports, verified = [], set()
    for f in forms:
        if f.explicit:
            tol = args.tol if args.tol is not None else vf.TOL_EXPLICIT
            rep = vf.residual_explicit(f, p, seed=seed, draws=args.draws, tol=tol)
        else:
            tol = args.tol if args.tol is not None else vf.TOL_IMPLICIT
            rep = vf.residual_implicit(f, p, seed=seed, tol=tol)
        reports.append((f, rep))
        if rep.verdict == vf.VERIFIED:
            verified.add(f.id)
    all_ids = verified | {f.id for f in cat.all_entries(case, p) if f.corrects}
    fixes = {f.corrects: f.id for f in cat.all_entries(case, p) + cat.travelling_wave_forms(case, p, args.c)
             if f.corrects}
    entries, unresolved = [], 0
    for f, rep in reports:
        d = rep.to_dict()
        if rep.verdict == vf.DISCREPANT:
            fix = fixes.get(f.id)
            if fix and (fix in verified or (args.entry and fix in all_ids)):
                d["resolved_by"] = fix
            else:
                unresolved += 1
        entries.append(d)
    _emit(args, {"case": case, "params": p.as_dict(), "seed": seed, "entries": entries},
          [["id", "verdict", "max_scaled", "points"]]
          + [[e["id"], e["verdict"], e["max_scaled"], e["points"]] for e in entries])
    if args.grid_csv and len(forms) == 1:
        with open(args.grid_csv, "w") as fh:
            fh.write(grid_csv(forms[0], p, reports[0][1].extra.get("constants"), seed=seed))
    counts = {}
    for e in entries:
        counts[e["verdict"]] = counts.get(e["verdict"], 0) + 1
    print(f"case {case}: {counts}", file=sys.stderr)
    return EXIT_DISCREPANT if unresolved else EXIT_OK


def cmd_audit(args) -> int:
    p = _params(args)
    case = args.case or int(p.case)
    rep = audit(case, p, seed=_seed(args), tol=args.tol, workers=args.workers)
    text = rep.to_json() + "\n"
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    elif not args.json:
        sys.stdout.write(text)
    for name, counts in rep.summary().items():
        print(f"{name:>20}: {counts}", file=sys.stderr)
    bad = rep.unresolved()
    for e in bad:
        print(f"UNRESOLVED {e['id']}: {e.get('max_scaled')}", file=sys.stderr)
    return EXIT_DISCREPANT if bad else EXIT_OK


def _grid(text: str):
    try:
        xs, ts = text.split(",")
        x0, x1, nx = xs.split(":")
        t0, t1, nt = ts.split(":")
        return (float(x0), float(x1), int(nx)), (float(t0), float(t1), int(nt))
    except ValueError:
        raise UsageError(f"--grid expects x0:x1:n,t0:t1:m, got {text!r}") from None


def cmd_solve_moc(args) -> int:
    p = _params(args)
    datum = ec.from_text(args.datum)
    if ec.free_symbols(datum) - {"x"}:
        raise UsageError("--datum may only involve x")
    xg, tg = _grid(args.grid)
    pts = moc.grid_points(xg, tg)
    sol = moc.solve_ivp(datum, p, pts, workers=args.workers)
    rows = [["x", "t", "u"]] + [list(r) for r in sol.rows()]
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])
        with open(args.csv, "w") as fh:
            fh.write(buf.getvalue())
    _emit(args, {"params": p.as_dict(), "datum": ec.to_text(datum), "t_valid": sol.t_valid,
                 "diagnostics": sol.diagnostics,
                 "x": sol.x.tolist(), "t": sol.t.tolist(), "u": sol.u.tolist()}, rows)
    print(f"{len(rows) - 1} points, max foot gap {sol.diagnostics['max_gap']:.2e}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="symflow", description="Lie-symmetry toolkit for u_t + u^k u_x + lam u^m = 0")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", help="symmetry class of (k, m)")
    p.add_argument("--k", type=_rational, required=True)
    p.add_argument("--m", type=_rational, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("generators", help="list the symmetry generators")
    _add_params(p)
    _add_common(p, tol=False)
    p.add_argument("--variant", choices=("corrected", "printed"), default="corrected")
    p.set_defaults(func=cmd_generators)

    p = sub.add_parser("check-symmetry", help="prolongation check of every generator")
    _add_params(p)
    _add_common(p)
    p.add_argument("--variant", choices=("corrected", "printed"), default="corrected")
    p.add_argument("--states", type=int, default=200)
    p.set_defaults(func=cmd_check_symmetry)

    p = sub.add_parser("bracket-table", help="verify a commutator table cell by cell (cases 2, 7)")
    _add_params(p)
    _add_common(p)
    p.add_argument("--table", choices=("printed", "corrected"), default="printed")
    p.add_argument("--samples", type=int, default=50)
    p.set_defaults(func=cmd_bracket_table)

    p = sub.add_parser("flow", help="closed-form group map, optionally checked against the flow")
    _add_params(p)
    _add_common(p)
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--point", default=None, help="x,t,u to transform")
    p.add_argument("--variant", choices=("corrected", "printed"), default="corrected")
    p.add_argument("--check", action="store_true", help="compare with numerical exponentiation")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("pushforward", help="transform a solution by a group map")
    _add_params(p)
    _add_common(p)
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--solution", required=True, help='u(x, t), e.g. "(10 - 2*x)^(1/2)"')
    p.add_argument("--convention", choices=("group", "theorem"), default="group")
    p.add_argument("--variant", choices=("corrected", "printed"), default="corrected")
    p.add_argument("--printed-formula", action="store_true",
                   help="use the transcribed transformed-solution formula instead of the map")
    p.add_argument("--verify", action="store_true", help="also compute the PDE residual")
    p.set_defaults(func=cmd_pushforward)

    p = sub.add_parser("catalog", help="list solutions, reductions and travelling waves")
    _add_params(p)
    _add_common(p, tol=False)
    p.add_argument("--kind", choices=("all", "solutions", "reductions", "travelling-waves"), default="all")
    p.add_argument("--c", type=float, default=1.5, help="travelling-wave speed")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("verify", help="PDE residuals of catalog entries")
    _add_params(p)
    _add_common(p)
    p.add_argument("--entry", default=None, help="single entry id")
    p.add_argument("--draws", type=int, default=5, help="constant draws per explicit entry")
    p.add_argument("--c", type=float, default=1.5, help="travelling-wave speed")
    p.add_argument("--grid-csv", default=None, help="with --entry: dump x,t,u,residual on a lattice")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("audit", help="run every check for a case")
    _add_params(p, case_required=True)
    _add_common(p)
    p.add_argument("--json", default=None, help="write the report to this file")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("solve-moc", help="method-of-characteristics solve from a datum u(x, 0)")
    _add_params(p, case=False)
    _add_common(p, tol=False)
    p.add_argument("--datum", required=True, help='initial datum in x, e.g. "1 + x/2"')
    p.add_argument("--grid", required=True, help="x0:x1:n,t0:t1:m")
    p.add_argument("--csv", default=None, help="also write x,t,u rows here")
    p.set_defaults(func=cmd_solve_moc)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"symflow {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SymflowError, ValueError, KeyError) as exc:
        print(f"symflow {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
