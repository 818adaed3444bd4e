"""Command-line entry point: ``droopkit run | fit-alpha | compare``."""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import warnings

from .config import ScenarioError, load_scenario
from .droop import dbm_to_mw, mw_to_dbm
from .oracle.alpha import StepSizeWarning, estimate_alpha_nl
from .oracle.field import ConfigError
from .oracle.link import simulate_link
from .sweep import CompareError, compare_models, read_csv, run_sweep, write_csv, write_gaps, write_json

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("droopkit")


def _power_list(text: str) -> list:
    try:
        vals = [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of dBm values: {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty power list")
    return vals


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="droopkit", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate a scenario sweep and write CSV (and JSON)")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True, help="CSV output path")
    run.add_argument("--json", help="optional JSON output path")
    run.add_argument("--seed", type=_u64, help="override the simulation seed")
    run.add_argument("--threads", type=int, default=1, help="worker processes for SSFM points")

    fit = sub.add_parser("fit-alpha", help="ASE-free runs and NLI coefficient estimate")
    fit.add_argument("--config", required=True)
    fit.add_argument("--powers", required=True, nargs="+", type=_power_list,
                     help="launch powers per tributary, dBm (space separated, or --powers=a,b,c)")
    fit.add_argument("--out", required=True)
    fit.add_argument("--seed", type=_u64)
    fit.add_argument("--threads", type=int, default=1)

    cmp_ = sub.add_parser("compare", help="per-point dB gap between two result files")
    cmp_.add_argument("--a", required=True)
    cmp_.add_argument("--b", required=True)
    cmp_.add_argument("--out", required=True)
    cmp_.add_argument("--model-a", help="model to take from --a (needed if it holds several)")
    cmp_.add_argument("--model-b", help="model to take from --b")
    cmp_.add_argument("--spans", type=int, help="span count for the predicted gap of power sweeps")
    return p


def _cmd_run(args) -> int:
    cfg = load_scenario(args.config)
    results = run_sweep(cfg, seed=args.seed, threads=args.threads)
    write_csv(results, args.out)
    if args.json:
        write_json(results, cfg, args.json, seed=args.seed)
    bad = sum(not r.valid for r in results)
    print(f"{len(results)} rows written to {args.out} ({bad} flagged)")
    return EXIT_OK


def _cmd_fit_alpha(args) -> int:
    cfg = load_scenario(args.config)
    scenario = cfg.link_scenario(seed=args.seed, ase=False)
    powers = [dbm_to_mw(p) for group in args.powers for p in group]
    points = simulate_link(scenario, powers, workers=args.threads)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", StepSizeWarning)
        fit = estimate_alpha_nl([(pt.power, pt.estimate) for pt in points], scenario.spans)
    model = fit.analytic_curve()
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["power_dbm", "power_mw", "v_nli", "alpha_hat_db", "alpha_model_db"])
        for p, v, a, m in zip(fit.powers, fit.v_nli, fit.alpha_curve, model):
            w.writerow([repr(round(mw_to_dbm(p), 9)), repr(float(p)), repr(float(v)),
                        repr(10 * math.log10(a)), repr(10 * math.log10(m))])
    print(f"alpha_nl = {fit.alpha_nl:.6g} mW^-2 ({10 * math.log10(fit.alpha_nl):.3f} dB) "
          f"from P = {mw_to_dbm(fit.fit_power):.2f} dBm over N = {fit.spans}")
    for w_ in caught:
        print(f"warning: {w_.message}", file=sys.stderr)
    return EXIT_OK


def _cmd_compare(args) -> int:
    a, b = read_csv(args.a), read_csv(args.b)
    gaps = compare_models(a, b, args.model_a, args.model_b, spans=args.spans)
    write_gaps(gaps, args.out)
    print(f"{len(gaps)} gap rows written to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "fit-alpha": _cmd_fit_alpha, "compare": _cmd_compare}[args.command]
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return handler(args)
    except (ScenarioError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CompareError as exc:
        print(f"compare error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
