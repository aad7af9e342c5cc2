"""Neural-network pose observer."""

from .network import (
    ObserverConfig,
    ObserverEvaluation,
    ObserverNet,
    TrainingHistory,
    benchmark_predictions,
    evaluate_observer,
    predict_pose,
    train,
)
from .training_data import ObserverRanges, TrainingSet, generate_training_set, observer_inputs
from .rate_estimator import RateEstimator, estimate_rates

__all__ = [
    "ObserverConfig",
    "ObserverEvaluation",
    "ObserverNet",
    "TrainingHistory",
    "benchmark_predictions",
    "evaluate_observer",
    "predict_pose",
    "train",
    "ObserverRanges",
    "TrainingSet",
    "generate_training_set",
    "observer_inputs",
    "RateEstimator",
    "estimate_rates",
]
