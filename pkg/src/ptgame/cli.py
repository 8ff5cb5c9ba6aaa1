"""Command-line front end.

Exit codes: 0 success or equilibrium, 1 negative verdict, 2 usage/parse error, 3 runtime abort.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import math
import sys

import numpy as np

from .dynamics import (OBJECTIVES, SELECTIONS, Constant, CoordinatorAbort, CoordinatorConfig,
                       GradientPlayConfig, coordinator_ascent, multi_start)
from .errors import DomainError, ScenarioError
from .eut import eut_residual, price_consistency
from .game import case1, uniform_price
from .prospect import EXPONENTIAL, ValueFunction
from .pt import (asymmetry_set, eut_report, pt_report,
                 symmetric_exponential_solve, vanishing_check)
from .scenario_io import dumps_scenario, parse_scenario

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_ABORT = 0, 1, 2, 3

log = logging.getLogger("ptgame")


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    return repr(float(v))


def _load(args):
    scenario, vfs, weighting = parse_scenario(args.scenario)
    if getattr(args, "lam", None) is not None:
        try:
            vfs = [ValueFunction.exponential(args.lam)] * scenario.n
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    return scenario, (None if args.mode == "eut" else vfs), weighting


def _gp_config(args) -> GradientPlayConfig:
    return GradientPlayConfig(step=Constant(args.eps), max_iterations=args.max_iter)


def _check_price(price, s):
    lo, hi = s.price_bounds
    if not lo <= price <= hi:
        raise UsageError(f"price {price} outside [{lo}, {hi}]")


def _exp_shared_lambda(vfs, s):
    if vfs is None or not s.homogeneous:
        return None
    if all(vf.kind == EXPONENTIAL and vf.p0 == vfs[0].p0 for vf in vfs):
        return vfs[0].p0
    return None


def sweep_rows(s, vfs, prices, starts, seed, cfg, tol=1e-6):
    """Equilibria per price as dicts sorted by (price, run_id)."""
    rows = []
    lam = _exp_shared_lambda(vfs, s)
    for price in prices:
        p = uniform_price(price, s.n)
        if lam is not None:
            sol = symmetric_exponential_solve(price, lam, s)
            rep = pt_report(sol.profile, p, vfs, s, tol)
            found = [(rep, 0)]
        else:
            res = multi_start(p, vfs, s, starts, cfg, seed=seed)
            found = list(zip(res.reports, res.run_ids))
        if not found:
            log.warning("no equilibrium found at price %s", price)
            rows.append(dict(price=float(price), x=[math.nan] * s.n, residual=math.nan,
                             classification="no-equilibrium", run_id=-1, seed=seed))
        for rep, run_id in found:
            rows.append(dict(price=float(price), x=[float(v) for v in rep.profile],
                             residual=rep.residual, classification=rep.classification,
                             run_id=run_id, seed=seed))
    rows.sort(key=lambda r: (r["price"], r["run_id"]))
    return rows


def write_rows(rows, n, fmt, fh):
    if fmt == "csv":
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["price", *[f"x{k + 1}" for k in range(n)], "residual", "classification",
                    "run_id", "seed"])
        for r in rows:
            w.writerow([_fmt(r["price"]), *map(_fmt, r["x"]), _fmt(r["residual"]),
                        r["classification"], r["run_id"], r["seed"]])
    else:
        for r in rows:
            fh.write(json.dumps(r, sort_keys=True) + "\n")


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def cmd_sweep(args) -> int:
    s, vfs, _ = _load(args)
    prices = args.price or []
    if not prices:
        raise UsageError("sweep needs at least one --price")
    for price in prices:
        _check_price(price, s)
    rows = sweep_rows(s, vfs, prices, args.starts, args.seed, _gp_config(args), args.tol)
    with _output(args.out) as fh:
        write_rows(rows, s.n, args.format, fh)
    return EXIT_OK


def cmd_coordinate(args) -> int:
    s, vfs, _ = _load(args)
    cc = CoordinatorConfig(price_step=args.price_step, restarts=args.starts,
                           selection=args.selection, objective=args.objective,
                           max_rounds=args.max_rounds, price_tol=args.price_tol, seed=args.seed,
                           init_price=args.init_price, gradient=_gp_config(args))
    code = EXIT_OK
    try:
        trace = coordinator_ascent(cc, vfs, s)
    except CoordinatorAbort as exc:
        trace = exc.trace
        code = EXIT_ABORT
    with _output(args.out) as fh:
        for r in trace.rounds:
            fh.write(json.dumps({"round": r.round, "price": r.price,
                                 "selected_x": [float(v) for v in r.selected_x],
                                 "J0": r.objective, "gradient": r.gradient,
                                 "next_price": r.next_price}, sort_keys=True) + "\n")
        final = {"terminal_price": trace.final_price, "converged": trace.converged,
                 "rounds": len(trace.rounds)}
        if trace.aborted:
            final["aborted"] = trace.aborted
        fh.write(json.dumps(final, sort_keys=True) + "\n")
    return code


def cmd_verify(args) -> int:
    s, vfs, _ = _load(args)
    try:
        x = np.array([float(v) for v in args.profile.split(",")])
    except ValueError as exc:
        raise UsageError(f"cannot parse profile {args.profile!r}") from exc
    if x.size != s.n:
        raise UsageError(f"profile needs {s.n} entries, got {x.size}")
    p = uniform_price(args.price, s.n)
    rep = eut_report(x, p, s, args.tol) if vfs is None else pt_report(x, p, vfs, s, args.tol)
    out = sys.stdout
    print(f"price: {args.price!r}", file=out)
    print(f"profile: {', '.join(_fmt(v) for v in x)}", file=out)
    for k, r in enumerate(rep.partial_residuals):
        print(f"player {k + 1}: partial residual {r:.6g}, tilted mean {rep.tilted_means[k]:.6g}",
              file=out)
    print(f"kappa gap: {rep.kappa_gap:.6g}", file=out)
    print(f"sum gap: {rep.sum_gap:.6g}", file=out)
    if rep.boundary_active:
        print("boundary active: classification uses partial residuals only", file=out)
    asym = sorted(k + 1 for k in asymmetry_set(x, p, s))
    print(f"asymmetric players: {asym if asym else 'none'}", file=out)
    if vfs is not None and price_consistency(p, s).consistent and eut_residual(x, p, s) <= 1e-9:
        print("EUT equilibrium under PT preferences:", file=out)
        for v in vanishing_check(x, p, vfs, s):
            sign = {1: "+", -1: "-", 0: "0"}[v.sign]
            text = v.verdict if v.verdict == "preserved" else f"{v.verdict}, sign {sign}"
            print(f"  player {v.player + 1}: {text}", file=out)
    print(f"classification: {rep.classification}", file=out)
    return EXIT_OK if rep.is_equilibrium else EXIT_NEGATIVE


def cmd_scenario(args) -> int:
    vfs = [ValueFunction.exponential(args.lam)] if args.lam is not None else None
    with _output(args.out) as fh:
        fh.write(dumps_scenario(case1(), vfs))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ptgame", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, needs_mode=True):
        sp.add_argument("--scenario", required=True, metavar="PATH")
        if needs_mode:
            sp.add_argument("--mode", choices=("eut", "pt"), default="pt")
        sp.add_argument("--lambda", dest="lam", type=float, default=None,
                        help="use exponential value functions with this lambda for every player")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=1e-6)
        sp.add_argument("--eps", type=float, default=0.05, help="constant gradient-play step")
        sp.add_argument("--max-iter", type=int, default=200_000)

    sp = sub.add_parser("sweep", help="equilibria over a list of uniform prices")
    common(sp)
    sp.add_argument("--price", type=float, action="append")
    sp.add_argument("--starts", type=int, default=50)
    sp.add_argument("--out", default=None)
    sp.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("coordinate", help="coordinator price ascent")
    common(sp)
    sp.add_argument("--objective", choices=OBJECTIVES, default="J0A")
    sp.add_argument("--selection", choices=SELECTIONS, default="jain")
    sp.add_argument("--starts", type=int, default=50)
    sp.add_argument("--max-rounds", type=int, default=100)
    sp.add_argument("--price-step", type=float, default=0.5)
    sp.add_argument("--price-tol", type=float, default=1e-6)
    sp.add_argument("--init-price", type=float, default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_coordinate)

    sp = sub.add_parser("verify", help="check a profile at a uniform price")
    common(sp)
    sp.add_argument("--profile", required=True, help="comma-separated strategies")
    sp.add_argument("--price", type=float, required=True)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("scenario", help="print the two-user reference scenario file")
    sp.add_argument("--lambda", dest="lam", type=float, default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_scenario)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, UsageError) as exc:
        print(f"ptgame: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, RuntimeError) as exc:
        print(f"ptgame: aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
