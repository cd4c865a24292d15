"""
JSON file format for latticeclimber instances (mixture + labeled point + optional budget).
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .errors import ContractViolation, InstanceFormatError
from .types import AttackBudget, LabeledPoint, LinearClassifier, Mixture

logger = logging.getLogger(__name__)


def _vector(values) -> list:
    # python floats serialize with repr, which round-trips bit-exactly
    return [float(v) for v in np.asarray(values, dtype=np.float64).ravel()]


def _matrix(values) -> list:
    return [_vector(row) for row in np.asarray(values, dtype=np.float64)]


class InstanceSchema:
    """Schema definition, encoding and validation for instance files."""

    VERSION = "1.0"

    SCHEMA = {
        "$schema": "http://json-schema.org/draft-07/schema#",
        "type": "object",
        "required": ["kind", "d", "k", "classifiers", "weights", "point"],
        "properties": {
            "version": {"type": "string"},
            "kind": {
                "type": "string",
                "enum": ["linear", "softmax_linear", "mlp"],
                "description": "Classifier family shared by every mixture member"
            },
            "d": {"type": "integer", "minimum": 1, "description": "Input dimension"},
            "k": {"type": "integer", "minimum": 2, "description": "Number of classes"},
            "classifiers": {
                "type": "array",
                "minItems": 1,
                "description": "linear: {theta, bias}; softmax_linear: {W, c}; mlp: {W1, b1, W2, b2}"
            },
            "weights": {
                "type": "array",
                "items": {"type": "number", "minimum": 0},
                "description": "Mixture probabilities q, summing to 1"
            },
            "point": {
                "type": "object",
                "properties": {
                    "x": {"type": "array", "items": {"type": "number"}},
                    "y": {"type": "integer"}
                },
                "required": ["x", "y"]
            },
            "budget": {
                "type": "object",
                "properties": {
                    "norm": {"type": "string", "enum": ["l2", "linf"]},
                    "epsilon": {"type": "number", "exclusiveMinimum": 0}
                },
                "required": ["norm", "epsilon"]
            }
        }
    }

    CLASSIFIER_FIELDS = {
        "linear": ("theta", "bias"),
        "softmax_linear": ("W", "c"),
        "mlp": ("W1", "b1", "W2", "b2"),
    }

    @classmethod
    def classifier_to_dict(cls, h) -> Dict[str, Any]:
        if h.kind == "linear":
            return {"theta": _vector(h.theta), "bias": float(h.bias)}
        if h.kind == "softmax_linear":
            return {"W": _matrix(h.weight), "c": _vector(h.bias)}
        if h.kind == "mlp":
            return {
                "W1": _matrix(h.hidden_weight),
                "b1": _vector(h.hidden_bias),
                "W2": _matrix(h.output_weight),
                "b2": _vector(h.output_bias),
            }
        raise ContractViolation(f"cannot serialize classifier kind '{h.kind}'")

    @classmethod
    def classifier_from_dict(cls, kind: str, data: Dict[str, Any]):
        from ..diff.classifiers import MlpClassifier, SoftmaxLinearClassifier

        if kind == "linear":
            return LinearClassifier(theta=data["theta"], bias=data["bias"])
        if kind == "softmax_linear":
            return SoftmaxLinearClassifier(weight=data["W"], bias=data["c"])
        return MlpClassifier(
            hidden_weight=data["W1"],
            hidden_bias=data["b1"],
            output_weight=data["W2"],
            output_bias=data["b2"],
        )

    @classmethod
    def create_instance(
        cls,
        mix: Mixture,
        point: LabeledPoint,
        budget: Optional[AttackBudget] = None,
    ) -> Dict[str, Any]:
        """Encode an instance as a JSON-ready dict."""
        if point.dim != mix.input_dim:
            raise ContractViolation(f"point has dimension {point.dim}, mixture expects {mix.input_dim}")
        instance = {
            "version": cls.VERSION,
            "kind": mix.kind,
            "d": mix.input_dim,
            "k": mix.num_classes,
            "classifiers": [cls.classifier_to_dict(h) for h in mix.classifiers],
            "weights": _vector(mix.weights),
            "point": {"x": _vector(point.x), "y": int(point.y)},
        }
        if budget is not None:
            instance["budget"] = {"norm": budget.norm.value, "epsilon": float(budget.epsilon)}
        return instance

    @classmethod
    def validate(cls, instance: Dict[str, Any]) -> None:
        """Check the structure of a decoded instance; raises InstanceFormatError."""
        if not isinstance(instance, dict):
            raise InstanceFormatError("instance must be a JSON object")
        for field in cls.SCHEMA["required"]:
            if field not in instance:
                raise InstanceFormatError(f"missing required field '{field}'")
        kind = instance["kind"]
        if kind not in cls.CLASSIFIER_FIELDS:
            raise InstanceFormatError(f"unknown classifier kind '{kind}'")
        classifiers = instance["classifiers"]
        if not isinstance(classifiers, list) or not classifiers:
            raise InstanceFormatError("'classifiers' must be a nonempty list")
        for index, entry in enumerate(classifiers):
            missing = [f for f in cls.CLASSIFIER_FIELDS[kind] if f not in entry]
            if missing:
                raise InstanceFormatError(f"classifier {index} is missing {missing}")
        if len(instance["weights"]) != len(classifiers):
            raise InstanceFormatError(
                f"{len(instance['weights'])} weights for {len(classifiers)} classifiers"
            )
        point = instance["point"]
        if not isinstance(point, dict) or "x" not in point or "y" not in point:
            raise InstanceFormatError("'point' must have fields x and y")
        if len(point["x"]) != instance["d"]:
            raise InstanceFormatError(f"point has {len(point['x'])} coordinates, d is {instance['d']}")

    @classmethod
    def parse_instance(
        cls, instance: Dict[str, Any]
    ) -> Tuple[Mixture, LabeledPoint, Optional[AttackBudget]]:
        """Decode a validated dict into domain objects."""
        cls.validate(instance)
        try:
            classifiers = [cls.classifier_from_dict(instance["kind"], c) for c in instance["classifiers"]]
            mix = Mixture(classifiers=tuple(classifiers), weights=instance["weights"])
            point = LabeledPoint(x=instance["point"]["x"], y=instance["point"]["y"])
            budget = None
            if "budget" in instance:
                budget = AttackBudget(norm=instance["budget"]["norm"], epsilon=instance["budget"]["epsilon"])
        except (ContractViolation, KeyError, TypeError) as e:
            raise InstanceFormatError(f"invalid instance: {e}") from e
        if mix.input_dim != instance["d"] or mix.num_classes != instance["k"]:
            raise InstanceFormatError(
                f"declared d={instance['d']}, k={instance['k']} disagree with the classifiers"
            )
        return mix, point, budget

    @classmethod
    def save_instance(
        cls,
        filepath: str,
        mix: Mixture,
        point: LabeledPoint,
        budget: Optional[AttackBudget] = None,
    ) -> Path:
        """Write an instance file; the output depends only on the instance."""
        path = Path(filepath)
        save_json(path, cls.create_instance(mix, point, budget))
        logger.info(f"Saved instance with m={mix.m}, d={mix.input_dim} to {path}")
        return path

    @classmethod
    def load_instance(cls, filepath: str) -> Tuple[Mixture, LabeledPoint, Optional[AttackBudget]]:
        data = load_json(filepath)
        try:
            return cls.parse_instance(data)
        except InstanceFormatError as e:
            raise InstanceFormatError(f"{filepath}: {e}") from e


def save_json(path: Path, data: Dict[str, Any]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write(json.dumps(data, indent=2))
        f.write("\n")


def load_json(filepath: str) -> Dict[str, Any]:
    """Read a JSON file, reporting syntax errors with line and column."""
    try:
        with open(filepath, "r") as f:
            text = f.read()
    except OSError as e:
        raise InstanceFormatError(f"cannot read {filepath}: {e.strerror}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(
            f"{filepath}: line {e.lineno}, column {e.colno}: {e.msg}"
        ) from e


def instance_fingerprint(mix: Mixture, point: LabeledPoint, budget: AttackBudget) -> str:
    """md5 of the canonical JSON encoding of (mixture, point, budget)."""
    canonical = json.dumps(
        InstanceSchema.create_instance(mix, point, budget),
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.md5(canonical.encode()).hexdigest()
