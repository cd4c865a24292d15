"""
Differentiable multi-class classifiers for latticeclimber.
"""

from .classifiers import (
    DifferentiableClassifier,
    MlpClassifier,
    SoftmaxLinearClassifier,
    TargetSelection,
    binary_label_to_class,
    class_to_binary_label,
    input_gradient,
    lift_point,
    lift_to_softmax,
    logit_jacobian,
    logits,
    multiclass_rev_margin,
    predict,
    probabilities,
    raw_margin,
    reduce_to_binary,
    select_target,
)

__all__ = [
    "DifferentiableClassifier",
    "MlpClassifier",
    "SoftmaxLinearClassifier",
    "TargetSelection",
    "binary_label_to_class",
    "class_to_binary_label",
    "input_gradient",
    "lift_point",
    "lift_to_softmax",
    "logit_jacobian",
    "logits",
    "multiclass_rev_margin",
    "predict",
    "probabilities",
    "raw_margin",
    "reduce_to_binary",
    "select_target",
]
