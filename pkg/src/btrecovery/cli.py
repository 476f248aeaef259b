"""Command-line entry point: run experiments, plot results, list scenarios."""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .plotting import MissingData, plot
from .runner import RunConfig, load_manifest_config, run
from .scenarios import UnknownScenario, all_scenarios, load_scenario, scenario_to_doc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="btrecovery",
        description="Peg-in-hole recovery-skill experiments: behavior-tree "
                    "skills, recovery planning, multi-objective policy search.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario experiment")
    p_run.add_argument("--scenario", type=int, help="scenario id (1-5)")
    p_run.add_argument("--iterations", type=int, default=40)
    p_run.add_argument("--evals", type=int, default=5)
    p_run.add_argument("--repetitions", type=int, default=10)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--optimizer", choices=("bo", "random"), default="bo")
    p_run.add_argument("--out", default="",
                       help="output directory (default: runs/scenario_<id>_seed_<seed>)")
    p_run.add_argument("--from-manifest", metavar="PATH",
                       help="re-run the configuration echoed in a manifest")
    p_run.add_argument("--workers", type=int, default=0,
                       help="repetition worker processes "
                            "(default: BTRECOVERY_WORKERS or 1)")

    p_plot = sub.add_parser("plot", help="plot the objective trade-off of a run")
    p_plot.add_argument("--in", dest="run_dir", required=True)
    p_plot.add_argument("--out", default=None, help="SVG path (default: <run>/pareto.svg)")

    p_sc = sub.add_parser("scenarios", help="inspect shipped scenarios")
    sc_sub = p_sc.add_subparsers(dest="scenario_command", required=True)
    sc_sub.add_parser("list", help="one line per scenario")
    p_show = sc_sub.add_parser("show", help="full scenario document as JSON")
    p_show.add_argument("id", type=int)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "run":
        if args.from_manifest:
            cfg = load_manifest_config(args.from_manifest, args.out)
        else:
            if args.scenario is None:
                print("error: --scenario or --from-manifest is required")
                return 2
            cfg = RunConfig(scenario=args.scenario, iterations=args.iterations,
                            evals=args.evals, repetitions=args.repetitions,
                            seed=args.seed, optimizer=args.optimizer,
                            out_dir=args.out)
        cfg.workers = args.workers
        try:
            code = run(cfg)
        except UnknownScenario as exc:
            print(f"error: unknown scenario {exc}")
            return 2
        if code == 0:
            print(cfg.resolved_out_dir())
        return code

    if args.command == "plot":
        try:
            out = plot(args.run_dir, args.out)
        except MissingData as exc:
            print(f"error: {exc}")
            return 1
        print(out)
        return 0

    if args.command == "scenarios":
        if args.scenario_command == "list":
            for spec in all_scenarios():
                dims = spec.param_space.dimension
                print(f"{spec.id}  {spec.name:40s} learned-params={dims}  "
                      f"recovery={[s.name for s in spec.catalog] or 'none'}")
            return 0
        try:
            spec = load_scenario(args.id)
        except UnknownScenario:
            print(f"error: unknown scenario {args.id}")
            return 2
        print(json.dumps(scenario_to_doc(spec), indent=2, sort_keys=True))
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
