"""Command-line entry point: ``constrained-duels <subcommand> ...``.

Exit codes: 0 success, 2 validation error, 3 infeasible benchmark,
4 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .errors import DuelError, Infeasible, ValidationError
from .harness import ExperimentConfig, load_csv, loglog_slope, run_experiment, sweep, write_outputs
from .instances import (
    borda_lb_instance,
    car_instance,
    condorcet_lb_family,
    resolve_instance,
    save_instance,
    synthetic_instance,
)
from .lp_benchmarks import solve_benchmark
from .policies import POLICY_NAMES

EXIT_OK, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_RUNTIME = 0, 2, 3, 4
BENCHMARK_KINDS = ("borda", "shifted_borda", "condorcet", "separated_x", "separated_y")

log = logging.getLogger("constrained_duels")


def _parse_seeds(spec: str, base: int) -> list[int]:
    """``"50"`` means 50 seeds starting at ``base``; ``"3,7,9"`` is an explicit list."""
    if "," in spec:
        return [int(s) for s in spec.split(",") if s.strip()]
    return list(range(base, base + int(spec)))


def _parse_policies(values: Optional[list[str]]) -> Optional[list[str]]:
    if not values:
        return None
    out = []
    for v in values:
        out.extend(p.strip() for p in v.split(",") if p.strip())
    bad = [p for p in out if p not in POLICY_NAMES]
    if bad:
        raise ValidationError(f"unknown policies {bad}; choose from {', '.join(POLICY_NAMES)}")
    return out


def _add_common(p: argparse.ArgumentParser, *, policy: bool = True, seeds: bool = True) -> None:
    p.add_argument("--instance", help="builtin name (synthetic-a/b/c, borda-lb-a/b) or instance JSON path")
    p.add_argument("--T", type=int, help="override horizon")
    p.add_argument("--B", type=float, help="override budget")
    p.add_argument("--sigma", type=float, help="override consumption noise std")
    p.add_argument("--out", help="output path (file or directory, per subcommand)")
    if policy:
        p.add_argument("--policy", action="append", help=f"policy name(s), repeatable or comma-separated: {', '.join(POLICY_NAMES)}")
        p.add_argument("--z", type=float, help="Lagrangian scale for both slots (default OPT_w/B + 1)")
        p.add_argument("--eta", type=float, help="override learning rate")
        p.add_argument("--gamma", type=float, help="override exploration rate")
        p.add_argument("--dual-step", type=float, help="dual step size (default 1/sqrt(T))")
        p.add_argument("--dual-input", choices=("observed", "estimate"), help="consumption fed to the dual update")
        p.add_argument("--config", help="JSON experiment config; command-line flags override it")
        p.add_argument("--workers", type=int, help="parallel trial workers")
    if seeds:
        p.add_argument("--seeds", default=None, help="seed count (with --seed as base) or comma list")
        p.add_argument("--seed", type=int, default=0, help="base seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="constrained-duels", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-benchmark", help="solve benchmark LPs and print OPT values as JSON")
    _add_common(p, policy=False, seeds=False)
    p.add_argument("--kind", choices=BENCHMARK_KINDS + ("all",), default="all")

    p = sub.add_parser("run", help="simulate policies and write CSV traces, summary JSON and an SVG figure")
    _add_common(p)

    p = sub.add_parser("sweep", help="regret across horizons with the budget scaled proportionally")
    _add_common(p)
    p.add_argument("--horizons", default="2000,8000,32000")
    p.add_argument("--budget-ratio", type=float, help="B/T for every horizon (default: instance's)")

    p = sub.add_parser("gen-instance", help="write an instance JSON file")
    p.add_argument("--family", choices=("synthetic", "car", "condorcet-lb", "borda-lb"), required=True)
    p.add_argument("--case", default="a", help="consumption case a/b/c (synthetic, car)")
    p.add_argument("--csv", help="pairwise-count CSV (car family)")
    p.add_argument("--K", type=int, default=3)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--variant", default=None)
    p.add_argument("--which", type=int, default=1)
    p.add_argument("--T", type=int)
    p.add_argument("--B", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="unused; accepted for flag uniformity")

    p = sub.add_parser("plot", help="render an SVG reward figure from a trace CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--title")
    return parser


def _config(args) -> ExperimentConfig:
    doc: dict = {}
    if getattr(args, "config", None):
        doc = json.loads(Path(args.config).read_text())
        if "seed_count" in doc:
            base = doc.pop("seed_base", 0)
            doc["seeds"] = list(range(base, base + doc.pop("seed_count")))
    if args.instance:
        doc["instance"] = args.instance
    if "instance" not in doc:
        raise ValidationError("--instance (or a config with 'instance') is required")
    policies = _parse_policies(args.policy)
    if policies:
        doc["policies"] = policies
    if args.seeds is not None:
        doc["seeds"] = _parse_seeds(args.seeds, args.seed)
    for key in ("T", "B", "sigma", "z", "eta", "gamma", "dual_step", "dual_input", "out", "workers"):
        val = getattr(args, key, None)
        if val is not None:
            doc[key] = val
    return ExperimentConfig(**doc)


def cmd_solve_benchmark(args) -> int:
    inst = resolve_instance(args.instance) if args.instance else None
    if inst is None:
        raise ValidationError("--instance is required")
    changes = {k: v for k, v in (("T", args.T), ("B", args.B), ("noise_sigma", args.sigma)) if v is not None}
    if changes:
        inst = inst.replace(**changes)
    kinds = BENCHMARK_KINDS if args.kind == "all" else (args.kind,)
    result: dict = {"instance": inst.name, "T": inst.T, "B": inst.B, "benchmarks": {}}
    infeasible = False
    for kind in kinds:
        try:
            result["benchmarks"][kind] = solve_benchmark(inst, kind).to_dict()
        except Infeasible as exc:
            infeasible = True
            result["benchmarks"][kind] = {"error": "Infeasible", "message": str(exc)}
        except DuelError as exc:
            if args.kind != "all":
                raise
            result["benchmarks"][kind] = {"error": type(exc).__name__, "message": str(exc)}
    text = json.dumps(result, indent=2)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return EXIT_INFEASIBLE if infeasible and args.kind != "all" else EXIT_OK


def cmd_run(args) -> int:
    cfg = _config(args)
    out = cfg.out or "results"
    table = run_experiment(cfg)
    paths = write_outputs(table, out)
    summary = table.summary()
    for pol, entry in summary["policies"].items():
        line = f"{pol:10s} reward {entry['final_reward_mean']:10.2f} +- {entry['final_reward_std']:.2f}  median tau {entry['tau_median']:.0f}"
        if "borda_regret_mean" in entry:
            line += f"  regret {entry['borda_regret_mean']:.2f}"
        print(line)
    print(f"wrote {', '.join(str(p) for p in paths.values())}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .plotting import emit_regret_plot

    cfg = _config(args)
    horizons = [int(h) for h in args.horizons.split(",")]
    results = sweep(cfg, horizons, args.budget_ratio)
    out = Path(cfg.out or "sweep")
    out.mkdir(parents=True, exist_ok=True)
    series: dict[str, list[float]] = {}
    with open(out / "regret.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["policy", "T", "seed", "opt_total", "regret"])
        for T, table, regrets in results:
            for pol, reg in regrets.items():
                series.setdefault(pol, []).append(reg.mean)
                for seed, r in zip(table.seeds(pol), reg.per_seed):
                    w.writerow([pol, T, seed, repr(reg.opt_total), repr(float(r))])
    summary = {"horizons": horizons, "policies": {}}
    for pol, means in series.items():
        slope = loglog_slope(horizons, means) if len(horizons) > 1 and min(means) > 0 else None
        summary["policies"][pol] = {"mean_regret": means, "loglog_slope": slope}
        print(f"{pol:10s} mean regret {', '.join(f'{m:.1f}' for m in means)}  slope {slope if slope is None else round(slope, 3)}")
    (out / "sweep_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    emit_regret_plot(horizons, series, out / "regret_vs_T.svg")
    print(f"wrote {out / 'regret.csv'}, {out / 'sweep_summary.json'}, {out / 'regret_vs_T.svg'}")
    return EXIT_OK


def cmd_gen_instance(args) -> int:
    kw = {k: v for k, v in (("T", args.T), ("B", args.B)) if v is not None}
    if args.family == "synthetic":
        inst = synthetic_instance(args.case, **kw)
    elif args.family == "car":
        if not args.csv:
            raise ValidationError("--csv is required for the car family")
        inst = car_instance(args.csv, args.case, **kw)
    elif args.family == "condorcet-lb":
        inst = condorcet_lb_family(args.K, args.epsilon, args.variant or "general", args.which, **kw)
    else:
        inst = borda_lb_instance(args.epsilon, args.variant or "lemma_4_4", **kw)
    if args.sigma is not None:
        inst = inst.replace(noise_sigma=args.sigma)
    save_instance(inst, args.out)
    print(f"wrote {inst.name} to {args.out}")
    return EXIT_OK


def cmd_plot(args) -> int:
    from .plotting import emit_plot

    table = load_csv(args.csv)
    emit_plot(table, args.out, title=args.title)
    print(f"wrote {args.out}")
    return EXIT_OK


COMMANDS = {
    "solve-benchmark": cmd_solve_benchmark,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "gen-instance": cmd_gen_instance,
    "plot": cmd_plot,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DuelError, OSError) as exc:
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
