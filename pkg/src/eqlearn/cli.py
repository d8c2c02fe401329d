"""Command-line frontend.

Exit codes: 0 when the command succeeded (and any requested verification
passed), 2 when verification found a gap above ``eps``, 1 on any error,
including malformed arguments.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys

from . import cost_model
from .cce import CceResult, cce_distributions, solve_cce
from .ce import CeCertificate, ce_mixture_gap, solve_ce
from .distributions import DIST_FORMATS, load_dist
from .games import (GAME_FORMATS, load_game, make_counterexample_game, make_hard_instance,
                    make_random_congestion_game, make_random_game)
from .reduction import CSV_FIELDS, bench_grid, reports_to_csv, run_reduction, scaling_fit
from .verify import EquilibriumReport, reports_to_csv as verify_csv, verify_ce, verify_cce

EXIT_OK, EXIT_ERROR, EXIT_UNVERIFIED = 0, 1, 2

SCHEMAS = {
    **GAME_FORMATS,
    **DIST_FORMATS,
    "cce-result-v1": ["format", "players", "actions", "marginals{denominator,numerators}",
                      "joint_samples", "params", "query_count", "noise", "seed"],
    "ce-certificate-v1": ["format", "params", "paper_scale", "query_count", "noise", "seed",
                          "loss_estimate", "sample_store{shape,dtype,base64}",
                          "representation", "strategies?"],
    "equilibrium-report": list(EquilibriumReport.__dataclass_fields__) + ["max_gap"],
    "equilibrium-report-csv": list(EquilibriumReport.CSV_FIELDS),
    "reduction-report": ["solver", "m", "n", "B", "eps", "alpha", "seed", "trials",
                         "successes", "per_trial_queries", "per_trial_success", "overrides",
                         "success_rate", "floor", "ci_half_width", "passes"],
    "reduction-csv": list(CSV_FIELDS),
    "complexity-table-csv": list(cost_model.TABLE_FIELDS),
}

COUNTEREXAMPLE_DIST = {"format": "joint-sparse-v1", "players": 2, "actions": 4,
               "profiles": [[2, 0], [1, 1]], "probs": [0.5, 0.5]}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_ERROR)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(args, payload: dict):
    """Write the primary artifact (deterministic) and a timestamped sidecar."""
    text = _dump(payload)
    out = getattr(args, "out", None)
    if not out:
        sys.stdout.write(text)
        return
    with open(out, "w") as fh:
        fh.write(text)
    meta = {"written_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "argv": sys.argv[1:]}
    with open(out + ".meta.json", "w") as fh:
        fh.write(_dump(meta))


def _need_seed(args):
    if args.seed is None:
        raise UsageError(f"--seed is required for '{args.command}'")


def _overrides(args, keys):
    over = {}
    for k in keys:
        v = getattr(args, f"override_{k}", None)
        if v is not None:
            over[k] = v
    return over


def _noise(name):
    return name.replace("-", "_")


def _write_trace(path, reports):
    if path:
        with open(path, "w") as fh:
            fh.write(verify_csv(reports))


# -- commands ----------------------------------------------------------------------

def cmd_gen(args):
    if args.kind == "counterexample":
        payload = make_counterexample_game().to_dict()
    elif args.kind == "counterexample-dist":
        payload = dict(COUNTEREXAMPLE_DIST)
    else:
        _need_seed(args)
        if args.players is None or args.actions is None:
            raise UsageError(f"--players and --actions are required for kind '{args.kind}'")
        if args.kind == "hard":
            game = make_hard_instance(args.players, args.actions, args.loss_bound, seed=args.seed)
        elif args.kind == "congestion":
            game = make_random_congestion_game(args.players, args.actions, args.loss_bound,
                                               seed=args.seed)
        else:
            game = make_random_game(args.players, args.actions, args.loss_bound, seed=args.seed)
        payload = game.to_dict()
    _emit(args, payload)
    return EXIT_OK


def _verify_kw(args):
    if args.verify == "mc" and args.seed is None:
        raise UsageError("--seed is required for Monte-Carlo verification")
    return dict(mode=args.verify, rng=args.seed, mc_samples=args.mc_samples,
                confidence=args.confidence)


def cmd_solve_cce(args):
    _need_seed(args)
    game = load_game(args.game)
    res = solve_cce(game, args.eps, args.alpha, overrides=_overrides(args, ["T"]),
                    noise=_noise(args.noise), delta=args.delta, rng=args.seed)
    payload = res.to_dict()
    reports = []
    if args.verify != "none":
        kw = _verify_kw(args)
        for name, dist in cce_distributions(res).items():
            reports.append(verify_cce(game, dist, args.eps, representation=name, **kw))
        payload["verification"] = [r.to_dict() for r in reports]
    _emit(args, payload)
    _write_trace(args.trace_csv, reports)
    return EXIT_OK if all(r.verdict for r in reports) else EXIT_UNVERIFIED


def cmd_solve_ce(args):
    _need_seed(args)
    game = load_game(args.game)
    cert = solve_ce(game, args.eps, args.alpha, overrides=_overrides(args, "KHTS"),
                    noise=_noise(args.noise), delta=args.delta, rng=args.seed)
    payload = cert.to_dict()
    reports = []
    if args.verify != "none":
        reports.append(ce_mixture_gap(cert, game, eps=args.eps, **_verify_kw(args)))
        payload["verification"] = [r.to_dict() for r in reports]
    _emit(args, payload)
    _write_trace(args.trace_csv, reports)
    return EXIT_OK if all(r.verdict for r in reports) else EXIT_UNVERIFIED


def _load_any_dist(path):
    with open(path) as fh:
        d = json.load(fh)
    fmt = d.get("format")
    if fmt == "cce-result-v1":
        return cce_distributions(CceResult.from_dict(d))["product"]
    if fmt == "ce-certificate-v1":
        cert = CeCertificate.from_dict(d)
        return cert.distribution()
    return load_dist(path)


def cmd_verify(args):
    game = load_game(args.game)
    dist = _load_any_dist(args.dist)
    fn = verify_ce if args.kind == "ce" else verify_cce
    mode = "auto" if args.verify == "none" else args.verify
    if mode == "mc" and args.seed is None:
        raise UsageError("--seed is required for Monte-Carlo verification")
    report = fn(game, dist, args.eps, mode=mode, rng=args.seed, mc_samples=args.mc_samples,
                confidence=args.confidence)
    _emit(args, report.to_dict())
    _write_trace(args.trace_csv, [report])
    return EXIT_OK if report.verdict else EXIT_UNVERIFIED


def cmd_reduce(args):
    _need_seed(args)
    report = run_reduction(args.solver, args.players, args.actions, B=args.loss_bound,
                           eps=args.eps, trials=args.trials, seed=args.seed, alpha=args.alpha,
                           overrides=_overrides(args, "T" if args.solver == "cce" else "KHTS") or None,
                           check_hypothesis=not args.no_hypothesis_check)
    _emit(args, report.to_dict())
    if args.trace_csv:
        with open(args.trace_csv, "w") as fh:
            fh.write(reports_to_csv([report]))
    return EXIT_OK


def cmd_bench(args):
    _need_seed(args)
    rows = bench_grid(args.players_grid, args.actions_grid, eps=args.eps, alpha=args.alpha,
                      B=args.loss_bound, seed=args.seed)
    fit = scaling_fit([r["m"] for r in rows], [r["n"] for r in rows],
                      [r["measured"] for r in rows])
    quantum = [cost_model.estimate("quantum_cce", r["m"], r["n"], args.eps, args.loss_bound,
                                   args.alpha).leading_term for r in rows]
    for r, q in zip(rows, quantum):
        r["quantum_model"] = q
    _emit(args, {"rows": rows, "fit": fit.to_dict(),
                 "classical_expectation": {"alpha_m": 1.0, "alpha_n": 1.0},
                 "quantum_model": {"alpha_m": 1.0, "alpha_n": 0.5},
                 "label": "model vs. measurement"})
    return EXIT_OK


def cmd_estimate(args):
    regimes = cost_model.REGIMES if args.regime == "all" else [args.regime]
    out = [cost_model.estimate(r, args.players, args.actions, args.eps, args.loss_bound,
                               args.alpha, beta=args.beta).to_dict() for r in regimes]
    _emit(args, {"estimates": out})
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def _common(p, solver=False, verify=False):
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", "-o", default=None, help="output JSON path (stdout if omitted)")
    if solver:
        p.add_argument("--game", required=True)
        p.add_argument("--eps", type=float, required=True)
        p.add_argument("--alpha", type=float, default=0.1)
        p.add_argument("--noise", choices=["exact", "uniform-mix", "argmax-shift"],
                       default="exact")
        p.add_argument("--delta", type=float, default=None)
    if verify:
        p.add_argument("--verify", choices=["exact", "mc", "auto", "none"], default="auto")
        p.add_argument("--mc-samples", type=int, default=None)
        p.add_argument("--confidence", type=float, default=0.95)
        p.add_argument("--trace-csv", default=None)


def _ints(text):
    return [int(x) for x in text.split(",") if x]


def build_parser():
    ap = _Parser(prog="eqlearn", description="Equilibrium learning toolkit")
    ap.add_argument("--schema", action="store_true", help="print artifact field lists and exit")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a game (or the counterexample distribution)")
    p.add_argument("--kind", required=True,
                   choices=["counterexample", "counterexample-dist", "hard", "congestion",
                            "random"])
    p.add_argument("--players", type=int)
    p.add_argument("--actions", type=int)
    p.add_argument("--loss-bound", type=float, default=1.0)
    _common(p)

    p = sub.add_parser("solve-cce", help="sample-based MWU for a coarse correlated equilibrium")
    _common(p, solver=True, verify=True)
    p.add_argument("--override-T", type=int)

    p = sub.add_parser("solve-ce", help="sample-based multi-scale MWU for a correlated equilibrium")
    _common(p, solver=True, verify=True)
    for k in "KHTS":
        p.add_argument(f"--override-{k}", type=int)

    p = sub.add_parser("verify", help="check a distribution against a game")
    p.add_argument("--game", required=True)
    p.add_argument("--dist", required=True)
    p.add_argument("--kind", choices=["ce", "cce"], required=True)
    p.add_argument("--eps", type=float, default=0.0)
    _common(p, verify=True)

    p = sub.add_parser("reduce", help="search-to-equilibrium reduction trials")
    p.add_argument("--solver", choices=["cce", "ce"], default="cce")
    p.add_argument("--players", type=int, required=True)
    p.add_argument("--actions", type=int, required=True)
    p.add_argument("--loss-bound", type=float, default=1.0)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--alpha", type=float, default=1.0 / 3.0)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--no-hypothesis-check", action="store_true")
    p.add_argument("--trace-csv", default=None)
    for k in "KHTS":
        p.add_argument(f"--override-{k}", type=int)
    _common(p)

    p = sub.add_parser("bench", help="measured classical CCE query counts over an (m, n) grid")
    p.add_argument("--players-grid", type=_ints, default=[2, 4, 8])
    p.add_argument("--actions-grid", type=_ints, default=[4, 16, 64])
    p.add_argument("--eps", type=float, default=0.9)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--loss-bound", type=float, default=1.0)
    _common(p)

    p = sub.add_parser("estimate", help="closed-form cost estimates")
    p.add_argument("--regime", choices=list(cost_model.REGIMES) + ["all"], default="all")
    p.add_argument("--players", type=int, required=True)
    p.add_argument("--actions", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--loss-bound", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=None)
    _common(p)
    return ap


COMMANDS = {"gen": cmd_gen, "solve-cce": cmd_solve_cce, "solve-ce": cmd_solve_ce,
            "verify": cmd_verify, "reduce": cmd_reduce, "bench": cmd_bench,
            "estimate": cmd_estimate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.schema:
        sys.stdout.write(_dump(SCHEMAS))
        return EXIT_OK
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_ERROR
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ValueError, OSError, RuntimeError, KeyError) as exc:
        print(f"eqlearn {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
