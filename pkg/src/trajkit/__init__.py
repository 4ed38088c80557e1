"""Flight-state recognition and state-conditioned trajectory prediction.

The package covers the whole chain from raw multi-sensor telemetry to a
with/without-recognition error comparison: cleaning, kinematic fusion,
windowed features, principal-component projection, a decision-DAG of
pairwise SVMs, and two trajectory predictors (a backprop network and a
multistep predictor-corrector with spatial confidence circles). The
``trajkit`` console script exposes every stage as a subcommand.
"""

from .adams import (
    ConfidenceCurve,
    QuadVelocityRegressor,
    TrajectoryPrediction,
    abm4_step,
    confidence_curve,
    confidence_radius,
    predict_trajectory,
)
from .dagsvm import DagSvmClassifier, evaluate_classifier, weighted_f1
from .errors import ToolkitError
from .evaluation import compare_recognition, point_distance, trajectory_error
from .fusion import (
    FeatureVector,
    FlightFrame,
    FlightState,
    altitude_from_pressure,
    curvature3,
    feature_matrix,
    fuse,
    window_features,
)
from .mlp import MlpRegressor, rollout, transition_dataset
from .pca import FeatureScaler, PrincipalComponents, jacobi_eigh
from .pipeline import PipelineConfig, run_reproduce
from .simgen import FlightScenario, SensorNoise, generate, generate_corpus
from .telemetry import (
    CleanStream,
    RawSample,
    RawStream,
    adaptive_smooth,
    newton_interpolate,
    preprocess,
    reject_outliers,
)

__version__ = "0.1.0"

__all__ = [
    "CleanStream",
    "ConfidenceCurve",
    "DagSvmClassifier",
    "FeatureScaler",
    "FeatureVector",
    "FlightFrame",
    "FlightScenario",
    "FlightState",
    "MlpRegressor",
    "PipelineConfig",
    "PrincipalComponents",
    "QuadVelocityRegressor",
    "RawSample",
    "RawStream",
    "SensorNoise",
    "ToolkitError",
    "TrajectoryPrediction",
    "abm4_step",
    "adaptive_smooth",
    "altitude_from_pressure",
    "compare_recognition",
    "confidence_curve",
    "confidence_radius",
    "curvature3",
    "evaluate_classifier",
    "feature_matrix",
    "fuse",
    "generate",
    "generate_corpus",
    "jacobi_eigh",
    "newton_interpolate",
    "point_distance",
    "predict_trajectory",
    "preprocess",
    "reject_outliers",
    "rollout",
    "run_reproduce",
    "trajectory_error",
    "transition_dataset",
    "weighted_f1",
    "window_features",
]
