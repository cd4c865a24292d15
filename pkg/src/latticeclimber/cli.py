"""
Command-line front end for latticeclimber.

Usage:
    python run_lattice.py gen --kind angle --r 0.9 --theta 0.8 --output data/instances/angle.json
    python run_lattice.py attack data/instances/angle.json --attack lca --epsilon 1.0
    python run_lattice.py sweep-angle --points 50
    python run_lattice.py bench-random --bias-setting 1 --trials 100
    python run_lattice.py oracle data/instances/angle.json --epsilon 1.0
    python run_lattice.py run configs/experiments/angle.yaml
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .core.config import ATTACK_NAMES, Config, ExperimentConfig
from .core.errors import (
    ConfigError,
    ContractViolation,
    InstanceFormatError,
    LatticeSizeError,
)
from .core.runner import ExperimentRunner
from .core.schema import InstanceSchema
from .core.types import AttackBudget

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_SIZE_CAP = 3

GEN_KINDS = ("angle", "random", "softmax", "mlp", "canonical")


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _budget(args) -> Optional[AttackBudget]:
    if args.epsilon is None:
        return None
    return AttackBudget(args.norm, args.epsilon)


def _add_budget_arguments(parser: argparse.ArgumentParser, default_epsilon: Optional[float] = None) -> None:
    parser.add_argument("--norm", choices=["l2", "linf"], default="l2", help="Perturbation norm (default: l2)")
    parser.add_argument("--epsilon", type=float, default=default_epsilon, help="Perturbation budget")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latticeclimber",
        description="latticeclimber - adversarial attacks on mixtures of classifiers",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python run_lattice.py gen --kind random --d 256 --m 8 --seed 42 --output data/instances/r8.json
  python run_lattice.py attack data/instances/r8.json --attack lca --epsilon 1.0 --trace
  python run_lattice.py sweep-angle --r 0.9 --epsilon 1.0 --points 50
  python run_lattice.py bench-random --m-grid 1 2 4 8 16 --trials 100 --workers 4
  python run_lattice.py oracle data/instances/r8.json --epsilon 1.0
        """,
    )
    parser.add_argument("--config", type=str, default="configs/lattice.yaml", help="Path to configuration file")
    parser.add_argument("--log-level", type=str, help="Override the configured log level")
    parser.add_argument("--quiet", action="store_true", help="Disable progress bars")

    sub = parser.add_subparsers(dest="command", required=True)

    # Instance generation
    gen = sub.add_parser("gen", help="Write a synthetic instance file")
    gen.add_argument("--kind", choices=GEN_KINDS, required=True, help="Instance family")
    gen.add_argument("--output", type=str, required=True, help="Instance file to write")
    gen.add_argument("--r", type=float, default=0.9, help="angle: distance of both boundaries")
    gen.add_argument("--theta", type=float, help="angle: angle between the normals, in (0, pi)")
    gen.add_argument("--d", type=int, default=256, help="random/softmax/mlp: input dimension")
    gen.add_argument("--m", type=int, default=8, help="random/softmax/mlp: number of classifiers")
    gen.add_argument("--k", type=int, default=3, help="softmax/mlp: number of classes")
    gen.add_argument("--hidden", type=int, default=16, help="mlp: hidden width")
    gen.add_argument("--mu", type=float, default=0.5, help="random: bias mean")
    gen.add_argument("--sigma", type=float, default=0.5, help="random: bias standard deviation")
    gen.add_argument("--temperature", type=float, default=10.0, help="Weight softmax temperature")
    gen.add_argument("--scale", type=float, default=1.0, help="softmax/mlp: parameter scale")
    gen.add_argument("--name", choices=["a", "b", "c", "d"], help="canonical: configuration name")
    gen.add_argument("--seed", type=int, default=0, help="Generator seed")
    _add_budget_arguments(gen)

    # Single attack
    attack = sub.add_parser("attack", help="Run one attack on an instance file")
    attack.add_argument("instance", type=str, help="Instance file")
    attack.add_argument("--attack", choices=ATTACK_NAMES, default="lca", help="Attack name (default: lca)")
    attack.add_argument("--order", choices=["decreasing", "given", "random"], help="Classifier visiting order")
    attack.add_argument("--seed", type=int, default=0, help="Attack seed")
    attack.add_argument("--trace", action="store_true", help="Print the per-iteration trace")
    attack.add_argument("--output", type=str, help="CSV file the result row is appended to")
    _add_budget_arguments(attack)

    # Angle sweep
    sweep = sub.add_parser("sweep-angle", help="Score attacks across the angle between two classifiers")
    sweep.add_argument("--r", type=float, help="Distance of both boundaries from the point")
    sweep.add_argument("--epsilon", type=float, help="L2 budget")
    sweep.add_argument("--points", type=int, help="Number of angles in the open grid (0, pi)")
    sweep.add_argument("--thetas", type=_float_list, help="Explicit comma-separated angle grid")
    sweep.add_argument("--attacks", nargs="+", choices=ATTACK_NAMES, help="Attacks to run")
    sweep.add_argument("--output", type=str, help="CSV output path")

    # Random mixture bench
    bench = sub.add_parser("bench-random", help="Mean scores on random linear mixtures")
    bench.add_argument("--m-grid", type=int, nargs="+", help="Mixture sizes")
    bench.add_argument("--trials", type=int, help="Trials per mixture size")
    bench.add_argument("--attacks", nargs="+", choices=ATTACK_NAMES, help="Attacks to run")
    bench.add_argument("--bias-setting", type=int, help="Index of a configured (mu, sigma) pair")
    bench.add_argument("--mu", type=float, help="Bias mean")
    bench.add_argument("--sigma", type=float, help="Bias standard deviation")
    bench.add_argument("--d", type=int, help="Input dimension")
    bench.add_argument("--epsilon", type=float, help="L2 budget")
    bench.add_argument("--base-seed", type=int, help="Seed every trial seed is derived from")
    bench.add_argument("--workers", type=int, help="Process pool size")
    bench.add_argument("--output", type=str, help="CSV output path for the aggregates")
    bench.add_argument("--raw", type=str, help="CSV output path for the per-trial rows")

    # Oracle
    oracle = sub.add_parser("oracle", help="Enumerate the vulnerability lattice of an instance file")
    oracle.add_argument("instance", type=str, help="Instance file")
    oracle.add_argument("--output", type=str, help="Lattice report file")
    oracle.add_argument("--max-m", type=int, help="Override the configured size cap")
    _add_budget_arguments(oracle)

    # Experiment file
    run = sub.add_parser("run", help="Run an experiment YAML file")
    run.add_argument("experiment", type=str, help="Experiment file")

    return parser


def generate_instance(args) -> Path:
    """Write the instance described by the gen arguments."""
    from . import synth

    budget = _budget(args)
    if args.kind == "angle":
        if args.theta is None:
            raise ContractViolation("gen --kind angle needs --theta")
        mix, point = synth.make_angle_instance(args.r, args.theta)
    elif args.kind == "random":
        spec = synth.RandomMixtureSpec(
            d=args.d,
            m=args.m,
            bias_mean=args.mu,
            bias_std=args.sigma,
            weight_temperature=args.temperature,
            seed=args.seed,
        )
        mix, point = synth.sample_random_mixture(spec)
    elif args.kind == "softmax":
        mix, point = synth.sample_random_softmax_mixture(
            args.d, args.k, args.m, scale=args.scale, seed=args.seed, temperature=args.temperature
        )
    elif args.kind == "mlp":
        mix, point = synth.sample_random_mlp_mixture(
            args.d, args.k, args.hidden, args.m, scale=args.scale, seed=args.seed, temperature=args.temperature
        )
    else:
        if args.name is None:
            raise ContractViolation("gen --kind canonical needs --name")
        mix, point, canonical_budget = synth.canonical_configuration(args.name)
        budget = budget or canonical_budget
    return InstanceSchema.save_instance(args.output, mix, point, budget)


def cmd_gen(args) -> int:
    path = generate_instance(args)
    print(f"📝 Wrote {args.kind} instance to {path}")
    return EXIT_OK


def cmd_attack(args, runner: ExperimentRunner) -> int:
    outcome, row = runner.attack_file(
        args.instance,
        args.attack,
        budget=_budget(args),
        ordering=args.order,
        seed=args.seed,
        output=args.output,
    )
    print(f"🎯 {row['attack']} on {row['instance']}")
    print(f"  Score: {row['score']:.6f}")
    print(f"  Fooled: {sorted(outcome.fooled)}")
    print(f"  Delta norm: {row['delta_norm']:.6f} ({row['norm']}, epsilon {row['epsilon']})")
    print(f"  Wall time: {row['wall_time']:.3f}s")
    if args.trace:
        print("\n📜 Trace:")
        for record in outcome.trace:
            verdict = "accepted" if record.accepted else "rejected"
            print(
                f"  step {record.step}: classifier {record.classifier} {verdict}, "
                f"pool {list(record.pool)}, objective {record.srh_value:.6g}, score {record.score:.6f}"
            )
    return EXIT_OK


def _default_output(config: Config, name: str) -> str:
    return str(Path(config.get("paths.results", "results")) / name)


def cmd_sweep_angle(args, runner: ExperimentRunner) -> int:
    output = args.output or _default_output(runner.config, "angle_sweep.csv")
    frame, metadata = runner.sweep_angle(
        r=args.r,
        epsilon=args.epsilon,
        points=args.points,
        attacks=args.attacks,
        thetas=args.thetas,
        output=output,
    )
    print(f"📐 Angle sweep: {len(frame)} rows written to {output}")
    print(f"  Critical angle: {metadata['critical_angle']:.4f} rad")
    for key, value in metadata.items():
        if key.startswith("transition_"):
            print(f"  {key[len('transition_'):]} drops below 1 at theta = {value:.4f}")
    return EXIT_OK


def cmd_bench_random(args, runner: ExperimentRunner) -> int:
    output = args.output or _default_output(runner.config, "random_bench.csv")
    summary, _, metadata = runner.bench_random(
        m_grid=args.m_grid,
        trials=args.trials,
        attacks=args.attacks,
        bias_setting=args.bias_setting,
        mu=args.mu,
        sigma=args.sigma,
        d=args.d,
        epsilon=args.epsilon,
        base_seed=args.base_seed,
        workers=args.workers,
        output=output,
        raw_output=args.raw,
    )
    print(f"🎲 Random mixture bench written to {output}")
    for row in summary.itertuples(index=False):
        print(f"  m={row.m:<3} {row.attack:<15} mean {row.mean_score:.4f} (std {row.std_score:.4f}, n={row.trials})")
    if "sign_test_p" in metadata:
        print(f"  Gap inversions: {metadata['gap_inversions']}, sign test p = {metadata['sign_test_p']:.4g}")
    if runner.stats["failed"]:
        print(f"  Failed trials: {runner.stats['failed']}")
    return EXIT_OK


def cmd_oracle(args, runner: ExperimentRunner) -> int:
    output = args.output or str(Path(args.instance).with_suffix("")) + "_lattice.json"
    report = runner.oracle_report(args.instance, budget=_budget(args), output=output, max_m=args.max_m)
    print(f"🔍 Lattice of {args.instance} ({report.m} classifiers) written to {output}")
    print(f"  Feasible regions: {len(report.feasible_sets)}")
    print(f"  Maximal regions: {[sorted(s) for s in report.maximal_regions]}")
    print(f"  Optimal score: {report.optimal_score:.6f}")
    if report.best_effort:
        print("  ⚠️  multi-class lattice: verdicts are best effort")
    return EXIT_OK


def cmd_run(args, runner: ExperimentRunner) -> int:
    experiment = ExperimentConfig.from_yaml(args.experiment)
    runner.run_experiment(experiment)
    print(f"✅ Experiment {experiment.experiment.value} completed")
    if experiment.output:
        print(f"  Output: {experiment.output}")
    return EXIT_OK


COMMANDS = {
    "attack": cmd_attack,
    "sweep-angle": cmd_sweep_angle,
    "bench-random": cmd_bench_random,
    "oracle": cmd_oracle,
    "run": cmd_run,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run the command and return the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    try:
        config = Config(args.config)
        if args.log_level:
            config.config["logging"]["level"] = args.log_level
        if args.command == "gen":
            return cmd_gen(args)
        runner = ExperimentRunner(config, quiet=args.quiet)
        return COMMANDS[args.command](args, runner)
    except LatticeSizeError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_SIZE_CAP
    except (ContractViolation, InstanceFormatError, ConfigError) as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        print("\n⏹️  Interrupted by user", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as e:
        logger.exception("command failed")
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
