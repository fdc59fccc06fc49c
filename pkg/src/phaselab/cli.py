"""Command-line interface for the experiment harness.

    phaselab <kind> [--config spec.json] [--out DIR] [--epsilon 0.04,0.02]
                    [--grid N] [--model NAME] [--seed S]

where <kind> is one of coeffs, generation, propagation, profile,
barriers, or all.  Exit code 0 means every acceptance check in the
emitted summary passed.
"""

from __future__ import annotations

import argparse
import sys

from . import harness


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phaselab",
        description="Nonlinear-diffusion Allen-Cahn interface experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in harness.EXPERIMENT_KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment(s)")
        p.add_argument("--config", help="JSON experiment spec file")
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("--epsilon", help="comma-separated decreasing list")
        p.add_argument("--grid", type=int, help="grid cells per side")
        p.add_argument("--model", help="registry model name")
        p.add_argument("--seed", type=int,
                       help="seed for perturbed generation initial data")
    return parser


def _make_spec(kind: str, args) -> harness.ExperimentSpec:
    overrides = {
        "out_dir": args.out,
        "grid_n": args.grid,
        "model": args.model,
        "seed": args.seed,
    }
    if args.epsilon:
        overrides["epsilons"] = tuple(
            float(v) for v in args.epsilon.split(","))
    if args.config:
        return harness.ExperimentSpec.from_json(args.config, kind=kind,
                                                **overrides)
    clean = {k: v for k, v in overrides.items() if v is not None}
    return harness.ExperimentSpec(kind=kind, **clean)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    kinds = (["coeffs", "generation", "propagation", "profile", "barriers"]
             if args.command == "all" else [args.command])
    results = {}
    for kind in kinds:
        spec = _make_spec(kind, args)
        results[kind] = harness.run_experiment(spec)
    ok, summary = harness.emit_report(results, args.out)
    sys.stdout.write(summary.read_text())
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
