"""
Experiment runner for latticeclimber: single attacks, angle sweeps, random
mixture benches and lattice reports, with CSV output and run statistics.
"""

import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import binomtest
from tqdm import tqdm

from .config import Config, ExperimentConfig, ExperimentKind
from .errors import ConfigError, ContractViolation
from .schema import InstanceSchema, save_json
from .types import AttackBudget, AttackOutcome, LabeledPoint, Mixture


def bench_spec(name: str, mix: Mixture, budget: AttackBudget, config: Config, seed: int, preset: Optional[str] = None):
    """Attack spec used by the sweeps and benches.

    With a preset name LCA runs that practical PGD stage plus refinement;
    without one it keeps the guaranteed per-pool stages.
    """
    from ..attacks import AttackKind, default_spec, resolve_kind

    kind = resolve_kind(name, mix)
    spec = default_spec(kind, budget, config, seed=seed)
    if kind is AttackKind.LCA_BINARY_LINEAR and preset:
        spec = replace(spec, pgd=config.pgd_config(f"lca_practical.{preset}", budget), refine=True)
    return spec


def _bench_preset(config: Config) -> Optional[str]:
    return config.get("experiments.random_bench.lca_preset")


def _bench_instance(row: Dict[str, Any]) -> Tuple[Mixture, LabeledPoint, AttackBudget]:
    from ..synth import RandomMixtureSpec, sample_random_mixture

    spec = RandomMixtureSpec(
        d=int(row["d"]),
        m=int(row["m"]),
        bias_mean=float(row["mu"]),
        bias_std=float(row["sigma"]),
        weight_temperature=float(row["temperature"]),
        seed=int(row["seed"]),
    )
    mix, point = sample_random_mixture(spec)
    return mix, point, AttackBudget("l2", float(row["epsilon"]))


def _bench_trial(task: Tuple[Dict[str, Any], Sequence[str], Config]) -> List[Dict[str, Any]]:
    """One bench trial: every attack on one sampled instance."""
    from ..attacks import run_attack

    base, attacks, config = task
    mix, point, budget = _bench_instance(base)
    rows = []
    for name in attacks:
        spec = bench_spec(name, mix, budget, config, int(base["seed"]), _bench_preset(config))
        outcome = run_attack(name, mix, point, budget, spec=spec)
        rows.append({**base, "attack": name, "score": outcome.score, "fooled": len(outcome.fooled)})
    return rows


def replay_trial(row: Dict[str, Any], config: Optional[Config] = None) -> float:
    """Re-run one recorded bench row from its seed and return the score."""
    from ..attacks import run_attack

    config = config or Config()
    mix, point, budget = _bench_instance(row)
    spec = bench_spec(row["attack"], mix, budget, config, int(row["seed"]), _bench_preset(config))
    return run_attack(row["attack"], mix, point, budget, spec=spec).score


def gap_trend(gaps: Sequence[float]) -> Tuple[int, float]:
    """Consecutive inversions of a gap sequence and a one-sided sign test for an increasing trend.

    Returns:
        Tuple of (number of i with gaps[i+1] < gaps[i], p-value of the sign
        test over all pairs i < j, ties dropped)
    """
    gaps = [float(g) for g in gaps]
    inversions = sum(1 for a, b in zip(gaps, gaps[1:]) if b < a)
    increases = decreases = 0
    for i in range(len(gaps)):
        for j in range(i + 1, len(gaps)):
            if gaps[j] > gaps[i]:
                increases += 1
            elif gaps[j] < gaps[i]:
                decreases += 1
    if increases + decreases == 0:
        return inversions, 1.0
    return inversions, float(binomtest(increases, increases + decreases, 0.5, alternative="greater").pvalue)


def write_csv(frame: pd.DataFrame, path: str, metadata: Optional[Dict[str, Any]] = None) -> Path:
    """Write a CSV preceded by a timestamp line and ``# key=value`` metadata lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(f"# generated {datetime.utcnow().isoformat()}Z\n")
        for key, value in (metadata or {}).items():
            f.write(f"# {key}={value}\n")
        frame.to_csv(f, index=False)
    return path


def read_csv(path: str) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


class ExperimentRunner:
    """Runs experiments and records their statistics."""

    def __init__(self, config: Optional[Config] = None, quiet: bool = False, setup_logging: bool = True):
        """
        Initialize experiment runner.

        Args:
            config: Configuration object
            quiet: Disable progress bars
            setup_logging: Configure the root logger from the logging section
        """
        self.config = config or Config()
        self.quiet = quiet
        if setup_logging:
            self._setup_logging()
        self.logger = logging.getLogger(__name__)

        # Statistics
        self.stats = {
            "experiment": None,
            "started_at": None,
            "completed_at": None,
            "trials": 0,
            "successful": 0,
            "failed": 0,
            "errors": [],
        }

    def _setup_logging(self) -> None:
        """Setup logging configuration."""
        log_config = self.config.get_logging_config()
        log_dir = Path(self.config.get("paths.metrics", "ops/metrics"))
        log_dir.mkdir(parents=True, exist_ok=True)

        logging.basicConfig(
            level=getattr(logging, str(log_config.get("level", "INFO")).upper(), logging.INFO),
            format=log_config.get("format", "%(asctime)s - %(name)s - %(levelname)s - %(message)s"),
            handlers=[
                logging.FileHandler(log_dir / "experiments.log"),
                logging.StreamHandler(),
            ],
        )

    def _start(self, experiment: str) -> None:
        self.stats.update(
            experiment=experiment,
            started_at=datetime.utcnow().isoformat(),
            completed_at=None,
            trials=0,
            successful=0,
            failed=0,
            errors=[],
        )
        self.logger.info(f"Starting {experiment}")

    def _record_failure(self, context: Dict[str, Any], error: Exception) -> None:
        self.logger.error(f"Trial {context} failed: {error}")
        self.stats["failed"] += 1
        self.stats["errors"].append({
            **context,
            "error": str(error),
            "timestamp": datetime.utcnow().isoformat(),
        })

    def _finish(self) -> Dict[str, Any]:
        self.stats["completed_at"] = datetime.utcnow().isoformat()
        self._save_stats()
        self.logger.info(
            f"✅ {self.stats['experiment']} completed: {self.stats['successful']} successful, "
            f"{self.stats['failed']} failed"
        )
        return self.stats

    def _save_stats(self) -> None:
        """Save run statistics to file."""
        try:
            stats_dir = Path(self.config.get("paths.metrics", "ops/metrics"))
            stats_dir.mkdir(parents=True, exist_ok=True)

            stats_file = stats_dir / f"run_stats_{datetime.now().strftime('%Y%m%d_%H%M%S')}.json"

            with open(stats_file, "w") as f:
                json.dump(self.stats, f, indent=2, default=str)

            self.logger.info(f"Statistics saved to {stats_file}")
        except OSError as e:
            self.logger.error(f"Failed to save statistics: {e}")

    def attack_file(
        self,
        instance_path: str,
        attack: str,
        budget: Optional[AttackBudget] = None,
        ordering: Optional[str] = None,
        seed: int = 0,
        output: Optional[str] = None,
    ) -> Tuple[AttackOutcome, Dict[str, Any]]:
        """
        Run one attack on an instance file.

        Args:
            instance_path: Instance JSON file
            attack: Attack name
            budget: Overrides the budget stored in the file
            ordering: Classifier ordering override (decreasing, given, random)
            seed: Attack seed
            output: CSV file the result row is appended to

        Returns:
            Tuple of (outcome, result row)
        """
        from ..attacks import Ordering, default_spec, resolve_kind, run_attack

        mix, point, stored_budget = InstanceSchema.load_instance(instance_path)
        budget = budget or stored_budget
        if budget is None:
            raise ContractViolation(f"{instance_path} has no budget; pass --norm and --epsilon")
        spec = default_spec(resolve_kind(attack, mix), budget, self.config, seed=seed)
        if ordering is not None:
            spec = replace(spec, ordering=Ordering.parse(ordering))

        started = time.perf_counter()
        outcome = run_attack(attack, mix, point, budget, spec=spec)
        elapsed = time.perf_counter() - started

        row = {
            "instance": str(instance_path),
            "attack": attack,
            "norm": budget.norm.value,
            "epsilon": budget.epsilon,
            "score": outcome.score,
            "fooled": " ".join(str(i) for i in sorted(outcome.fooled)),
            "delta_norm": budget.measure(outcome.delta),
            "iterations": outcome.iterations_used,
            "wall_time": round(elapsed, 6),
        }
        if output:
            path = Path(output)
            path.parent.mkdir(parents=True, exist_ok=True)
            pd.DataFrame([row]).to_csv(path, mode="a", header=not path.exists(), index=False)
            self.logger.info(f"Appended result to {path}")
        return outcome, row

    def sweep_angle(
        self,
        r: Optional[float] = None,
        epsilon: Optional[float] = None,
        points: Optional[int] = None,
        attacks: Optional[Sequence[str]] = None,
        thetas: Optional[Sequence[float]] = None,
        output: Optional[str] = None,
    ) -> Tuple[pd.DataFrame, Dict[str, Any]]:
        """
        Score each attack on angle instances across a grid of angles.

        Args:
            r: Distance of both boundaries from the point
            epsilon: L2 budget
            points: Size of the open grid in (0, pi) when ``thetas`` is not given
            attacks: Attack names
            thetas: Explicit angle grid
            output: CSV path

        Returns:
            Tuple of (rows of theta, attack, score; metadata with the critical angle
            and each attack's transition angle)
        """
        from ..attacks import run_attack
        from ..synth import critical_angle, make_angle_instance

        section = self.config.get_experiment_config("angle_sweep")
        r = float(section["r"] if r is None else r)
        epsilon = float(section["epsilon"] if epsilon is None else epsilon)
        attacks = list(attacks or section["attacks"])
        if thetas is None:
            count = int(section["points"] if points is None else points)
            if count < 1:
                raise ConfigError("the angle grid needs at least one point")
            thetas = np.linspace(0.0, math.pi, count + 2)[1:-1]
        thetas = [float(t) for t in thetas]
        if not thetas:
            raise ConfigError("the angle grid is empty")
        budget = AttackBudget("l2", epsilon)

        self._start("angle_sweep")
        rows = []
        for theta in tqdm(thetas, desc="angles", disable=self.quiet):
            mix, point = make_angle_instance(r, theta)
            for name in attacks:
                self.stats["trials"] += 1
                try:
                    spec = bench_spec(name, mix, budget, self.config, 0, section.get("lca_preset"))
                    outcome = run_attack(name, mix, point, budget, spec=spec)
                except (ArithmeticError, ValueError) as e:
                    self._record_failure({"theta": theta, "attack": name}, e)
                    continue
                self.stats["successful"] += 1
                rows.append({"theta": theta, "attack": name, "score": outcome.score})

        frame = pd.DataFrame(rows, columns=["theta", "attack", "score"])
        metadata = {"r": r, "epsilon": epsilon, "critical_angle": critical_angle(r, epsilon)}
        for name in attacks:
            scores = frame[frame["attack"] == name]
            dropped = scores[scores["score"] < 1.0]
            metadata[f"transition_{name}"] = float(dropped["theta"].min()) if len(dropped) else float("nan")
        if output:
            write_csv(frame, output, metadata)
            self.logger.info(f"Wrote angle sweep to {output}")
        self._finish()
        return frame, metadata

    def bench_random(
        self,
        m_grid: Optional[Sequence[int]] = None,
        trials: Optional[int] = None,
        attacks: Optional[Sequence[str]] = None,
        bias_setting: Optional[int] = None,
        mu: Optional[float] = None,
        sigma: Optional[float] = None,
        d: Optional[int] = None,
        epsilon: Optional[float] = None,
        base_seed: Optional[int] = None,
        workers: Optional[int] = None,
        output: Optional[str] = None,
        raw_output: Optional[str] = None,
    ) -> Tuple[pd.DataFrame, pd.DataFrame, Dict[str, Any]]:
        """
        Mean score of each attack on random linear mixtures for every m in the grid.

        Returns:
            Tuple of (aggregate rows m, attack, mean_score, std_score, trials;
            raw per-trial rows sorted by (m, attack, trial); metadata with the
            LCA-ARC gap trend when both attacks ran)
        """
        section = self.config.get_experiment_config("random_bench")
        if bias_setting is not None:
            settings = section["bias_settings"]
            if not 0 <= bias_setting < len(settings):
                raise ConfigError(f"bias setting {bias_setting} outside [0, {len(settings)})")
            mu, sigma = settings[bias_setting]
        params = {
            "d": int(section["d"] if d is None else d),
            "mu": float(section["mu"] if mu is None else mu),
            "sigma": float(section["sigma"] if sigma is None else sigma),
            "temperature": float(section["temperature"]),
            "epsilon": float(section["epsilon"] if epsilon is None else epsilon),
        }
        m_grid = [int(m) for m in (m_grid or section["m_grid"])]
        trials = int(section["trials"] if trials is None else trials)
        if trials < 1 or not m_grid:
            raise ConfigError("the bench needs trials >= 1 and a nonempty m grid")
        attacks = list(attacks or section["attacks"])
        base_seed = int(section["base_seed"] if base_seed is None else base_seed)
        workers = int(section.get("workers", 1) if workers is None else workers)

        from ..synth import trial_seed

        tasks = []
        for m in m_grid:
            for trial in range(trials):
                seed = trial_seed(base_seed, m * 1_000_003 + trial)
                tasks.append(({**params, "m": m, "trial": trial, "seed": seed}, attacks, self.config))

        self._start("random_bench")
        raw = []
        progress = tqdm(total=len(tasks), desc="trials", disable=self.quiet)
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as executor:
                futures = {executor.submit(_bench_trial, task): task for task in tasks}
                for future, task in futures.items():
                    self._collect(future.result, task, raw)
                    progress.update(1)
        else:
            for task in tasks:
                self._collect(lambda: _bench_trial(task), task, raw)
                progress.update(1)
        progress.close()

        columns = ["m", "attack", "trial", "seed", "d", "mu", "sigma", "temperature", "epsilon", "score", "fooled"]
        raw_frame = pd.DataFrame(raw, columns=columns).sort_values(["m", "attack", "trial"]).reset_index(drop=True)
        summary = (
            raw_frame.groupby(["m", "attack"], sort=True)["score"]
            .agg(mean_score="mean", std_score="std", trials="count")
            .reset_index()
        )
        summary["std_score"] = summary["std_score"].fillna(0.0)

        metadata = {
            **params,
            "base_seed": base_seed,
            "trials": trials,
            "lca_stages": _bench_preset(self.config) or "guaranteed",
        }
        if "lca" in attacks and "arc" in attacks:
            means = summary.pivot(index="m", columns="attack", values="mean_score")
            gaps = (means["lca"] - means["arc"]).tolist()
            inversions, p_value = gap_trend(gaps)
            metadata.update(gap_inversions=inversions, sign_test_p=p_value)

        if output:
            write_csv(summary, output, metadata)
            self.logger.info(f"Wrote bench summary to {output}")
        if raw_output:
            write_csv(raw_frame, raw_output, metadata)
            self.logger.info(f"Wrote per-trial rows to {raw_output}")
        self._finish()
        return summary, raw_frame, metadata

    def _collect(self, produce, task, raw: List[Dict[str, Any]]) -> None:
        base = task[0]
        self.stats["trials"] += 1
        try:
            raw.extend(produce())
            self.stats["successful"] += 1
        except (ArithmeticError, ValueError) as e:
            self._record_failure({"m": base["m"], "trial": base["trial"], "seed": base["seed"]}, e)

    def oracle_report(
        self,
        instance_path: str,
        budget: Optional[AttackBudget] = None,
        output: Optional[str] = None,
        max_m: Optional[int] = None,
    ):
        """
        Enumerate the vulnerability lattice of an instance file.

        Returns:
            LatticeReport
        """
        from ..oracle import OracleSettings, enumerate_lattice, report_to_dict

        mix, point, stored_budget = InstanceSchema.load_instance(instance_path)
        budget = budget or stored_budget
        if budget is None:
            raise ContractViolation(f"{instance_path} has no budget; pass --norm and --epsilon")
        settings = OracleSettings.from_config(self.config)
        if max_m is not None:
            settings = replace(settings, max_m=int(max_m))
        report = enumerate_lattice(mix, point, budget, settings=settings)
        if output:
            save_json(Path(output), report_to_dict(report))
            self.logger.info(f"Wrote lattice report to {output}")
        return report

    def run_experiment(self, experiment: ExperimentConfig) -> Any:
        """Run an experiment described by an ExperimentConfig."""
        self.logger.info(f"Running experiment {experiment.experiment.value}")
        instance = experiment.instance
        if experiment.experiment is ExperimentKind.ANGLE_SWEEP:
            return self.sweep_angle(
                r=instance.get("r"),
                epsilon=experiment.epsilon,
                points=instance.get("points"),
                attacks=experiment.attacks,
                output=experiment.output,
            )
        if experiment.experiment is ExperimentKind.RANDOM_MIXTURE_BENCH:
            return self.bench_random(
                m_grid=instance.get("m_grid"),
                trials=experiment.trials,
                attacks=experiment.attacks,
                mu=instance.get("mu"),
                sigma=instance.get("sigma"),
                d=instance.get("d"),
                epsilon=experiment.epsilon,
                base_seed=experiment.base_seed,
                output=experiment.output,
            )
        if experiment.experiment is ExperimentKind.SINGLE_ATTACK:
            rows = []
            for name in experiment.attacks:
                _, row = self.attack_file(
                    instance["file"], name, experiment.budget, seed=experiment.base_seed, output=experiment.output
                )
                rows.append(row)
            return pd.DataFrame(rows)
        return self.oracle_report(instance["file"], experiment.budget, experiment.output)
