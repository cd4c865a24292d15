"""
Configuration management for latticeclimber.
"""

import copy
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from .errors import ConfigError, ContractViolation
from .types import AttackBudget

DEFAULT_CONFIG_PATH = "configs/lattice.yaml"

ATTACK_NAMES = ("lca", "lca-binary", "lca-multiclass", "apgd", "arc")

DEFAULTS: Dict[str, Any] = {
    "attacks": {
        "apgd": {
            "steps": 100,
            "step_size_ratio": 0.25,
            "momentum": 0.9,
            "restarts": 4,
            "random_init": True,
            "halve_at": 0.9,
            "step_rule": "auto",
        },
        "lca_multiclass": {
            "steps": 100,
            "step_size_ratio": 0.25,
            "momentum": 0.0,
            "restarts": 0,
            "random_init": False,
            "halve_at": 0.9,
            "step_rule": "auto",
        },
        "lca_practical": {
            "angle": {"steps": 100, "step_size_ratio": 0.05, "step_rule": "vanilla"},
            "random_bench": {"steps": 200, "step_size_ratio": 0.005, "step_rule": "vanilla"},
        },
        "arc": {"slack": 1e-6},
    },
    "oracle": {
        "max_m": 16,
        "refine_steps": 2000,
        "target_slack": 1e-6,
        "verify_tol": 1e-9,
        "nudge": 1e-7,
        "grid_resolution_ratio": 1e-3,
        "cross_check": False,
        "workers": 1,
    },
    "experiments": {
        "angle_sweep": {
            "r": 0.9,
            "epsilon": 1.0,
            "points": 50,
            "attacks": ["lca", "arc"],
            "lca_preset": "angle",
        },
        "random_bench": {
            "d": 256,
            "m_grid": [1, 2, 4, 8, 16],
            "trials": 100,
            "mu": 0.5,
            "sigma": 0.5,
            "temperature": 10.0,
            "epsilon": 4.0,
            "lca_preset": None,
            "base_seed": 42,
            "attacks": ["lca", "arc"],
            "workers": 1,
            "bias_settings": [[0.5, 0.5], [0.2, 0.005], [0.2, 0.25], [0.8, 0.25]],
        },
    },
    "paths": {
        "results": "results",
        "instances": "data/instances",
        "metrics": "ops/metrics",
    },
    "logging": {
        "level": "INFO",
        "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    },
}


class Config:
    """Configuration manager for latticeclimber."""

    def __init__(self, config_path: Optional[str] = None):
        self.config_path = config_path or DEFAULT_CONFIG_PATH
        self.config = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        """Load configuration from YAML file with defaults."""
        defaults = copy.deepcopy(DEFAULTS)

        if os.path.exists(self.config_path):
            with open(self.config_path, "r") as f:
                try:
                    user_config = yaml.safe_load(f) or {}
                except yaml.YAMLError as e:
                    raise ConfigError(f"{self.config_path}: {e}") from e
            if not isinstance(user_config, dict):
                raise ConfigError(f"{self.config_path}: top level must be a mapping")
            # Deep merge user config with defaults
            self._deep_merge(defaults, user_config)

        return defaults

    def _deep_merge(self, base: Dict[str, Any], override: Dict[str, Any]) -> None:
        """Recursively merge override dict into base dict."""
        for key, value in override.items():
            if key in base and isinstance(base[key], dict) and isinstance(value, dict):
                self._deep_merge(base[key], value)
            else:
                base[key] = value

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value by dot notation key."""
        keys = key.split(".")
        value = self.config

        for k in keys:
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default

        return value

    def ensure_directories(self) -> None:
        """Ensure all required directories exist."""
        paths = self.get("paths", {})
        for path_name, path_value in paths.items():
            Path(path_value).mkdir(parents=True, exist_ok=True)

    def get_attack_config(self, kind: str) -> Dict[str, Any]:
        """Get the section for one attack (apgd, lca_multiclass, arc, lca_practical.<preset>)."""
        section = self.get(f"attacks.{kind}")
        if not isinstance(section, dict):
            raise ConfigError(f"no attack configuration named '{kind}'")
        return section

    def get_oracle_config(self) -> Dict[str, Any]:
        return self.get("oracle", {})

    def get_experiment_config(self, name: str) -> Dict[str, Any]:
        section = self.get(f"experiments.{name}")
        if not isinstance(section, dict):
            raise ConfigError(f"no experiment configuration named '{name}'")
        return section

    def get_logging_config(self) -> Dict[str, Any]:
        return self.get("logging", {})

    def get_paths(self) -> Dict[str, str]:
        return self.get("paths", {})

    def pgd_config(self, kind: str, budget: AttackBudget):
        """Build a PgdConfig from an attack section, resolving step_size_ratio and step_rule 'auto'."""
        from ..optim.pgd import PgdConfig, StepRule

        section = self.get_attack_config(kind)
        rule_name = str(section.get("step_rule", "auto"))
        rule = StepRule.for_norm(budget.norm) if rule_name == "auto" else StepRule.parse(rule_name)
        ratio = float(section.get("step_size_ratio", 0.25))
        try:
            return PgdConfig(
                steps=int(section.get("steps", 100)),
                step_size=ratio * budget.epsilon,
                step_rule=rule,
                momentum=float(section.get("momentum", 0.0)),
                restarts=int(section.get("restarts", 0)),
                random_init=bool(section.get("random_init", False)),
                halve_at=section.get("halve_at"),
            )
        except ContractViolation as e:
            raise ConfigError(f"attacks.{kind}: {e}") from e


class ExperimentKind(Enum):
    ANGLE_SWEEP = "angle_sweep"
    RANDOM_MIXTURE_BENCH = "random_bench"
    SINGLE_ATTACK = "single_attack"
    ORACLE_REPORT = "oracle_report"


@dataclass
class ExperimentConfig:
    """One experiment to run, as read from an experiment YAML file."""

    experiment: ExperimentKind
    attacks: List[str] = field(default_factory=lambda: ["lca", "arc"])
    norm: str = "l2"
    epsilon: float = 1.0
    instance: Dict[str, Any] = field(default_factory=dict)
    trials: int = 1
    base_seed: int = 42
    output: Optional[str] = None

    @property
    def budget(self) -> AttackBudget:
        return AttackBudget(norm=self.norm, epsilon=self.epsilon)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        """Validate and build; every problem is reported as a ConfigError."""
        if not isinstance(data, dict):
            raise ConfigError("experiment configuration must be a mapping")
        try:
            kind = ExperimentKind(data.get("experiment"))
        except ValueError:
            known = ", ".join(k.value for k in ExperimentKind)
            raise ConfigError(f"unknown experiment '{data.get('experiment')}' (expected one of {known})")

        attacks = list(data.get("attacks", ["lca", "arc"]))
        unknown = [a for a in attacks if a not in ATTACK_NAMES]
        if unknown:
            raise ConfigError(f"unknown attack name(s) {unknown}")

        budget = data.get("budget", {}) or {}
        trials = int(data.get("trials", 1))
        if trials < 1:
            raise ConfigError(f"trials must be at least 1, got {trials}")

        instance = dict(data.get("instance", {}) or {})
        mixture_file = instance.get("file")
        if mixture_file is not None and not Path(mixture_file).exists():
            raise ConfigError(f"instance file {mixture_file} does not exist")
        if kind in (ExperimentKind.SINGLE_ATTACK, ExperimentKind.ORACLE_REPORT) and mixture_file is None:
            raise ConfigError(f"experiment '{kind.value}' needs instance.file")

        config = cls(
            experiment=kind,
            attacks=attacks,
            norm=str(budget.get("norm", "l2")),
            epsilon=float(budget.get("epsilon", 1.0)),
            instance=instance,
            trials=trials,
            base_seed=int(data.get("base_seed", 42)),
            output=data.get("output"),
        )
        try:
            config.budget
        except ContractViolation as e:
            raise ConfigError(f"invalid budget: {e}") from e
        return config

    @classmethod
    def from_yaml(cls, path: str) -> "ExperimentConfig":
        if not os.path.exists(path):
            raise ConfigError(f"experiment file {path} does not exist")
        with open(path, "r") as f:
            try:
                data = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ConfigError(f"{path}: {e}") from e
        return cls.from_dict(data)
