"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Every failure prints one ``idfilter: error: <kind>: <message>`` line to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import DataError, load_csv, rescale_unit, subset
from .evalharness import CSV_HEADER, FULL_HIDDEN_GRID, EvalProtocol, elm_sfs, evaluate_subset
from .mbfr import classify_rejected, dimensional_relevance, mbfr_select, redundancy_score
from .morisita import ScaleError, ScaleSet, choose_scales, linear_window, mindid, scale_profile
from .plots import emit_loglog_svg, emit_profile_svg
from .simgen import ButterflyConfig, Experiment, FriedmanConfig, gen_butterfly, gen_friedman, monte_carlo

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _scales_arg(text: str) -> ScaleSet:
    try:
        return ScaleSet.parse(text)
    except ScaleError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _names_arg(text: str) -> list[str]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    if not names:
        raise argparse.ArgumentTypeError("empty column list")
    return names


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False)


class _Out:
    def __init__(self, args):
        self.json = args.json
        self.quiet = args.quiet

    def say(self, text: str):
        if not self.quiet and not self.json:
            print(text)

    def emit(self, obj):
        if self.json:
            print(_dumps(obj))


def _load(args):
    d = load_csv(args.input, args.target, drop_incomplete=args.drop_incomplete)
    return rescale_unit(d)


def _scales_for(args, d) -> ScaleSet:
    return args.scales if args.scales is not None else choose_scales(d)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_estimate_id(args, out: _Out) -> int:
    d = _load(args)
    cols = args.columns or list(d.names)
    scales = _scales_for(args, d)
    est = mindid(d.columns(cols), args.m, scales)
    payload = {"columns": cols, **est.to_dict()}
    out.emit(payload)
    out.say(f"M_{args.m}({', '.join(cols)}) = {est.intrinsic_dim:.4f}  "
            f"(slope {est.slope:.4f}, E={est.embedding_dim}, scales {scales})")
    for w in est.warnings:
        out.say(f"warning: {w}")
    return EXIT_OK


def cmd_choose_scales(args, out: _Out) -> int:
    d = _load(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        scales = choose_scales(d, args.probe_max, args.r2, args.prefer_steepest)
    profile = scale_profile(d, args.probe_max)
    lo, hi, _ = linear_window(profile, args.r2, args.prefer_steepest)
    if args.svg:
        emit_loglog_svg(profile.inverse_edges.tolist(), profile.log_index.tolist(), args.svg, (lo, hi))
    out.emit({"scales": list(scales), "window": [lo, hi],
              "occupied_limit": profile.occupied_limit,
              "warnings": [str(w.message) for w in caught]})
    out.say(f"scales: {','.join(map(str, scales))}  (linear window {lo}..{hi})")
    return EXIT_OK


def cmd_select(args, out: _Out) -> int:
    d = _load(args)
    scales = _scales_for(args, d)
    trace = mbfr_select(d, scales, args.C)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / f"{args.prefix}.json").write_text(trace.to_json() + "\n", encoding="utf-8")
    (outdir / f"{args.prefix}.csv").write_text(trace.to_csv(), encoding="utf-8")
    emit_profile_svg(trace, outdir / f"{args.prefix}.svg")
    out.emit(trace.to_dict())
    out.say(f"M_2({d.target}) = {trace.target_id:.4f}, scales {scales}")
    for i, s in enumerate(trace.steps, start=1):
        out.say(f"{i:3d}  {s.feature:<20s} diss={s.diss:.4f}")
    out.say(f"suggested cut-off (heuristic): {trace.knee()} feature(s)")
    return EXIT_OK


def cmd_dr(args, out: _Out) -> int:
    d = _load(args)
    scales = _scales_for(args, d)
    rep = dimensional_relevance(d, args.features, scales)
    out.emit({"features": args.features, "scales": list(scales), **rep.to_dict()})
    out.say(f"DR = {rep.dr:.4f} (clipped {rep.dr_clipped:.4f}), diss = {rep.diss:.4f}, "
            f"M_2(Y) = {rep.target_id:.4f}")
    return EXIT_OK


def cmd_classify(args, out: _Out) -> int:
    d = _load(args)
    scales = _scales_for(args, d)
    if args.selected:
        reports = [redundancy_score(d, args.selected, r, scales) for r in args.rejected]
    else:
        trace = mbfr_select(d, scales, args.C)
        reports = [classify_rejected(d, trace, r, scales, args.n_selected) for r in args.rejected]
    out.emit([r.to_dict() for r in reports])
    for r in reports:
        out.say(f"{r.feature}: redundancy score {r.score:.3f} (delta ID {r.delta_id:.3f}, "
                f"own ID {r.standalone_id:.3f}, given {','.join(r.selected)})")
    return EXIT_OK


def cmd_generate(args, out: _Out) -> int:
    if args.kind == "butterfly":
        noise = 0.0 if args.noise is None else args.noise
        d = gen_butterfly(ButterflyConfig(n=args.n, noise_sd_fraction=noise, seed=args.seed,
                                          sig=args.sig, pure_linear=args.pure_linear))
    else:
        noise = 1.0 if args.noise is None else args.noise
        d = gen_friedman(FriedmanConfig(n=args.n, noise_sd=noise, seed=args.seed))
    d.to_csv(args.out)
    out.emit({"path": str(args.out), "rows": d.n_rows, "columns": list(d.names)})
    out.say(f"wrote {d.n_rows} rows x {d.n_cols} columns to {args.out}")
    return EXIT_OK


def cmd_montecarlo(args, out: _Out) -> int:
    params = {"n": args.n}
    if args.kind == "butterfly":
        params["noise_sd_fraction"] = args.noise or 0.0
    elif args.noise is not None:
        params["noise_sd"] = args.noise
    default_scales = (5, 20) if args.kind == "butterfly" else (1, 6)
    scales = args.scales or ScaleSet.range(*default_scales)
    exp = Experiment(generator=args.kind, params=tuple(params.items()),
                     scales=scales.inverse_edges, C=args.C, shuffle=args.shuffle,
                     drop=tuple(args.drop or ()), first_k=args.first_k)
    summary = monte_carlo(exp, args.sims, args.base_seed, n_jobs=args.threads)
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "summary.json").write_text(summary.to_json() + "\n", encoding="utf-8")
        (outdir / "selections.csv").write_text(summary.selections_csv(), encoding="utf-8")
    out.emit(summary.to_dict())
    out.say(f"{args.sims} simulation(s): mean M_2(Y) = {summary.mean_target_id:.4f}, "
            f"mean min(diss) = {summary.mean_min_diss:.4f}")
    for key, count in summary.first_k_counts.items():
        out.say(f"  first {args.first_k}: {key} ({count})")
    return EXIT_OK


def cmd_evaluate(args, out: _Out) -> int:
    d = load_csv(args.input, args.target, drop_incomplete=args.drop_incomplete)
    protocol = EvalProtocol(
        n_splits=args.splits, n_folds=args.folds, n_retrain=args.retrains,
        hidden_grid=FULL_HIDDEN_GRID if args.full_grid else EvalProtocol.hidden_grid,
        variance_guard=not args.no_guard, bias=not args.no_bias, seed=args.seed)
    subsets = list(args.features or [])
    payload = {}
    if args.elm_sfs:
        res = elm_sfs(d, protocol)
        payload["elm_sfs"] = res.to_dict()
        subsets.append(res.selected)
        out.say(f"ELM_SFS selected: {','.join(res.selected)}")
    if not subsets:
        raise UsageError("give --features and/or --elm-sfs")
    reports = [evaluate_subset(d, fs, protocol) for fs in subsets]
    payload["reports"] = [r.to_dict(timing=args.timing) for r in reports]
    if args.csv:
        name = args.dataset_name or Path(args.input).stem
        rows = [r.csv_row(name, str(i)) for i, r in enumerate(reports, start=1)]
        Path(args.csv).write_text(CSV_HEADER + "".join(rows), encoding="utf-8")
    out.emit(payload)
    for r in reports:
        out.say(f"{','.join(r.features)}: RE_tst = {r.mean_re:.4f} ({r.sd_re:.4f})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output on stdout")
    common.add_argument("--quiet", action="store_true", help="suppress human-readable output")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker processes for independent simulations")

    data = _Parser(add_help=False)
    data.add_argument("--input", required=True, help="CSV file with a header row")
    data.add_argument("--target", required=True, help="name of the target column")
    data.add_argument("--drop-incomplete", action="store_true",
                      help="drop rows with empty or non-finite cells instead of failing")

    scales = _Parser(add_help=False)
    scales.add_argument("--scales", type=_scales_arg, default=None,
                        help="inverse edge lengths, '5..20' or '1,2,4,8' (default: chosen from data)")

    p = _Parser(prog="idfilter", description="Morisita-based intrinsic dimension and feature selection")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("estimate-id", parents=[common, data, scales], help="Morisita ID estimate")
    s.add_argument("--columns", type=_names_arg, help="columns to use (default: all)")
    s.add_argument("--m", type=int, default=2)
    s.set_defaults(func=cmd_estimate_id)

    s = sub.add_parser("choose-scales", parents=[common, data], help="pick scales from the log-log plot")
    s.add_argument("--probe-max", type=int, default=130)
    s.add_argument("--r2", type=float, default=0.99)
    s.add_argument("--prefer-steepest", action="store_true")
    s.add_argument("--svg", help="write the log-log diagnostic here")
    s.set_defaults(func=cmd_choose_scales)

    s = sub.add_parser("select", parents=[common, data, scales], help="run the MBFR selection")
    s.add_argument("--C", type=int, default=None, help="number of steps (default E-1)")
    s.add_argument("--out", default=".", help="output directory")
    s.add_argument("--prefix", default="trace")
    s.set_defaults(func=cmd_select)

    s = sub.add_parser("dr", parents=[common, data, scales], help="coefficient of dimensional relevance")
    s.add_argument("--features", type=_names_arg, required=True)
    s.set_defaults(func=cmd_dr)

    s = sub.add_parser("classify", parents=[common, data, scales],
                       help="redundant vs irrelevant score of rejected features")
    s.add_argument("--rejected", type=_names_arg, required=True)
    s.add_argument("--selected", type=_names_arg, help="selected set (default: run MBFR)")
    s.add_argument("--n-selected", type=int, default=None,
                   help="cut-off in the MBFR order (default: knee heuristic)")
    s.add_argument("--C", type=int, default=None)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("generate", parents=[common], help="write a simulated dataset")
    s.add_argument("kind", choices=["butterfly", "friedman"])
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--noise", type=float, default=None,
                   help="butterfly: noise sd as a fraction of sd(Y); friedman: noise sd")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--sig", choices=["logistic", "tanh"], default="logistic")
    s.add_argument("--pure-linear", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("montecarlo", parents=[common, scales], help="repeat MBFR on simulated data")
    s.add_argument("kind", choices=["butterfly", "friedman"])
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--noise", type=float, default=None)
    s.add_argument("--sims", type=int, default=20)
    s.add_argument("--base-seed", type=int, default=0)
    s.add_argument("--C", type=int, default=None)
    s.add_argument("--shuffle", action="store_true", help="shuffle the target")
    s.add_argument("--drop", type=_names_arg, help="columns to remove first")
    s.add_argument("--first-k", type=int, default=2)
    s.add_argument("--out", help="directory for summary.json and selections.csv")
    s.set_defaults(func=cmd_montecarlo)

    s = sub.add_parser("evaluate", parents=[common, data], help="ELM evaluation of feature subsets")
    s.add_argument("--features", type=_names_arg, action="append",
                   help="comma-separated subset; repeat to compare several")
    s.add_argument("--elm-sfs", action="store_true", help="also run the ELM wrapper baseline")
    s.add_argument("--splits", type=int, default=20)
    s.add_argument("--folds", type=int, default=10)
    s.add_argument("--retrains", type=int, default=100)
    s.add_argument("--full-grid", action="store_true", help="hidden sizes 1..350")
    s.add_argument("--no-guard", action="store_true", help="plain CV minimiser")
    s.add_argument("--no-bias", action="store_true", help="ELM without hidden biases")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--csv", help="write one summary row per subset")
    s.add_argument("--dataset-name")
    s.add_argument("--timing", action="store_true", help="include runtimes in JSON")
    s.set_defaults(func=cmd_evaluate)
    return p


def _fail(kind: str, exc: BaseException, code: int) -> int:
    msg = " ".join(str(exc).split())
    print(f"idfilter: error: {kind}: {msg}", file=sys.stderr)
    return code


def run(argv=None) -> int:
    logging.basicConfig(level=logging.ERROR, format="%(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "kind", None) and args.command in ("generate", "montecarlo") and args.n is None:
            args.n = 10000 if args.kind == "butterfly" else 40000
        return args.func(args, _Out(args))
    except UsageError as exc:
        return _fail("usage", exc, EXIT_USAGE)
    except (DataError, OSError) as exc:
        return _fail("data", exc, EXIT_DATA)
    except (ScaleError, np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
        return _fail("numerical", exc, EXIT_NUMERIC)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
