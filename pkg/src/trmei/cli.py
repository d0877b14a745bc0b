"""Command-line interface: ``trmei run``, ``trmei campaign`` and ``trmei plot``.

Every option can also be set through an environment variable named
``TRMEI_<OPTION>`` (upper case, dashes as underscores), e.g.
``TRMEI_BUDGET=20``. Command-line flags take precedence.

Exit codes: 0 success, 1 runtime failure, 2 invalid flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .gp import HyperBounds
from .harness import CampaignSpec, read_curve_csv, run_campaign
from .optimizer import METHODS, GpFitConfig, OptimizerConfig
from .penalized import PenaltyConfig
from .plotting import convergence_svg
from .problems import DEFAULT_LOWER, DEFAULT_UPPER, PROBLEMS
from .trust_region import TrustRegionConfig

ENV_PREFIX = "TRMEI_"
log = logging.getLogger("trmei")


class UsageError(Exception):
    """Invalid flag value detected after parsing; maps to exit code 2."""


def parse_seeds(text: str) -> list[int]:
    """Parse ``"0..29"``, ``"1,4,9"`` or a mix such as ``"0..4,10"`` (ranges inclusive)."""
    seeds = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            a, b = part.split("..", 1)
            a, b = int(a), int(b)
            if b < a:
                raise ValueError(f"empty seed range {part!r}")
            seeds.extend(range(a, b + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ValueError("no seeds given")
    return seeds


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in str(text).split(",") if t.strip()]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    return str(text).strip().lower() in {"1", "true", "yes", "on"}


def _add_algorithm_flags(p: argparse.ArgumentParser):
    d_tr = TrustRegionConfig()
    d_gp = HyperBounds()
    p.add_argument("--dim", type=int, default=20)
    p.add_argument("--lower", type=float, default=DEFAULT_LOWER, help="box lower bound (every dimension)")
    p.add_argument("--upper", type=float, default=DEFAULT_UPPER, help="box upper bound (every dimension)")
    p.add_argument("--n-init", type=int, default=None, help="initial design size (default 2*dim)")
    p.add_argument("--budget", type=int, default=50, help="evaluations after the initial design")
    p.add_argument("--big-m", type=float, default=PenaltyConfig().big_m,
                   help="penalty per violated constraint, standardized objective units")
    p.add_argument("--tr-length-init", type=float, default=d_tr.length_init)
    p.add_argument("--tr-length-min", type=float, default=d_tr.length_min)
    p.add_argument("--tr-length-max", type=float, default=d_tr.length_max)
    p.add_argument("--tau-s", type=int, default=d_tr.tau_s, help="successes before expanding")
    p.add_argument("--tau-f", type=int, default=d_tr.tau_f, help="failures before shrinking (default from dim)")
    p.add_argument("--n-cand", type=int, default=d_tr.n_cand, help="candidates per step (default from dim)")
    p.add_argument("--p-perturb", type=float, default=d_tr.p_perturb,
                   help="per-coordinate perturbation probability (default from dim)")
    p.add_argument("--gp-restarts", type=int, default=GpFitConfig().restarts)
    p.add_argument("--gp-maxiter", type=int, default=GpFitConfig().maxiter)
    p.add_argument("--ls-min", type=float, default=d_gp.lengthscale[0])
    p.add_argument("--ls-max", type=float, default=d_gp.lengthscale[1])
    p.add_argument("--sv-min", type=float, default=d_gp.signal_variance[0])
    p.add_argument("--sv-max", type=float, default=d_gp.signal_variance[1])
    p.add_argument("--jitter-min", type=float, default=d_gp.jitter[0])
    p.add_argument("--jitter-max", type=float, default=d_gp.jitter[1])
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="runs")
    p.add_argument("--print-config", action="store_true", help="print the resolved configuration as JSON and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trmei", description=__doc__.splitlines()[0])
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="a single optimization run")
    p_run.add_argument("--problem", required=True, help=f"one of {sorted(PROBLEMS)}")
    p_run.add_argument("--method", default="tr-mei", help=f"one of {sorted(METHODS)}")
    p_run.add_argument("--seed", type=int, default=0)
    _add_algorithm_flags(p_run)

    p_camp = sub.add_parser("campaign", help="problems x methods x seeds")
    p_camp.add_argument("--problems", required=True, help="comma-separated problem names")
    p_camp.add_argument("--methods", default="tr-mei,tr-ts,random")
    p_camp.add_argument("--seeds", default="0..29", help="e.g. 0..29 or 1,2,3")
    _add_algorithm_flags(p_camp)

    p_plot = sub.add_parser("plot", help="SVG convergence plots from curve CSVs")
    p_plot.add_argument("--curves", required=True, nargs="+",
                        help="curve CSV files or directories containing them")
    p_plot.add_argument("--out", default="plots")
    p_plot.add_argument("--log-y", action="store_true")

    for p in (parser, p_run, p_camp, p_plot):
        _apply_env_defaults(p)
    return parser


def _apply_env_defaults(parser: argparse.ArgumentParser):
    for action in parser._actions:
        if not action.option_strings or action.dest == "help":
            continue
        env = ENV_PREFIX + action.dest.upper()
        if env not in os.environ:
            continue
        value = os.environ[env]
        if isinstance(action, argparse._StoreTrueAction):
            action.default = _bool(value)
        elif action.nargs == "+":
            action.default = value.split()
        else:
            action.default = value
        # an env value satisfies a required flag
        action.required = False


def config_from_args(args, seed: int = 0) -> OptimizerConfig:
    bounds = HyperBounds((args.ls_min, args.ls_max), (args.sv_min, args.sv_max), (args.jitter_min, args.jitter_max))
    trc = TrustRegionConfig(
        length_init=args.tr_length_init,
        length_min=args.tr_length_min,
        length_max=args.tr_length_max,
        tau_s=args.tau_s,
        tau_f=args.tau_f,
        n_cand=args.n_cand,
        p_perturb=args.p_perturb,
    )
    return OptimizerConfig(
        n_init=args.n_init,
        budget=args.budget,
        penalty=PenaltyConfig(args.big_m),
        trust_region=trc,
        gp=GpFitConfig(bounds, args.gp_restarts, args.gp_maxiter),
        seed=seed,
    )


def _validate(args, problems, methods, seeds):
    if not problems:
        raise UsageError("--problem(s): no problem name given")
    bad = [p for p in problems if p not in PROBLEMS]
    if bad:
        raise UsageError(f"--problem(s): unknown {bad}; choose from {sorted(PROBLEMS)}")
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise UsageError(f"--method(s): unknown {bad}; choose from {sorted(METHODS)}")
    if len(set(seeds)) != len(seeds):
        raise UsageError("--seeds: duplicate seeds")
    if args.budget < 0:
        raise UsageError("--budget must be non-negative")
    if args.n_init is not None and args.n_init < 2:
        raise UsageError("--n-init must be at least 2")
    if args.dim < 1:
        raise UsageError("--dim must be positive")
    if args.lower >= args.upper:
        raise UsageError("--lower must be below --upper")
    if args.big_m <= 0:
        raise UsageError("--big-m must be positive")
    if args.p_perturb is not None and not 0 < args.p_perturb <= 1:
        raise UsageError("--p-perturb must lie in (0, 1]")
    if args.workers < 1:
        raise UsageError("--workers must be positive")


def _spec_from_args(args) -> CampaignSpec:
    if args.command == "run":
        problems, methods, seeds = [args.problem], [args.method], [args.seed]
    else:
        problems, methods = _csv_list(args.problems), _csv_list(args.methods)
        try:
            seeds = parse_seeds(args.seeds)
        except ValueError as exc:
            raise UsageError(f"--seeds: {exc}") from None
    _validate(args, problems, methods, seeds)
    return CampaignSpec(
        problems=problems, methods=methods, seeds=seeds, dim=args.dim,
        lower=args.lower, upper=args.upper, config=config_from_args(args),
        out_dir=args.out, workers=args.workers,
    )


def cmd_run(args) -> int:
    spec = _spec_from_args(args)
    if args.print_config:
        print(json.dumps(spec.to_dict(), indent=2, sort_keys=True))
        return 0
    result = run_campaign(spec)
    for key, err in sorted(result.errors.items()):
        print(f"error in {key}: {err}", file=sys.stderr)
    print(f"wrote {len(result.traces)} trace(s) to {Path(args.out).resolve()}")
    return 1 if result.errors else 0


def _collect_curves(paths) -> tuple[list[Path], list[str]]:
    files, missing = [], []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(p.glob("*.csv")))
        elif p.is_file():
            files.append(p)
        else:
            missing.append(str(p))
    return files, missing


def cmd_plot(args) -> int:
    files, missing = _collect_curves(args.curves)
    if missing or not files:
        print("missing curve files: " + (", ".join(missing) or "(none found)"), file=sys.stderr)
        return 1
    groups: dict[str, dict] = {}
    for f in files:
        problem, _, method = f.stem.rpartition("_")
        if not problem:
            problem, method = f.stem, f.stem
        cols = read_curve_csv(f)
        groups.setdefault(problem, {})[method] = (cols["eval_index"], cols["mean"], cols["se"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    total_dropped = 0
    for problem in sorted(groups):
        meta = json.dumps({"problem": problem, "sources": sorted(str(f) for f in files if
                           f.stem.rpartition("_")[0] == problem), "log_y": args.log_y}, sort_keys=True)
        svg, dropped = convergence_svg(problem, groups[problem], log_y=args.log_y, metadata=meta)
        total_dropped += dropped
        (out / f"{problem}.svg").write_text(svg)
    if total_dropped:
        print(f"warning: dropped {total_dropped} non-positive point(s) from log-scale plots", file=sys.stderr)
    print(f"wrote {len(groups)} plot(s) to {out.resolve()}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad flags, 0 on --help
        return int(exc.code or 0)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING))
    try:
        if args.command == "plot":
            return cmd_plot(args)
        return cmd_run(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        log.exception("run failed")
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
