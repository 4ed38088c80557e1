"""End-to-end orchestration: corpus, recognition pipeline, comparison run.

This wires the stages together for the ``reproduce`` command and returns the
full report as plain dicts, leaving file writing to the CLI. Per-stage wall
times are returned separately so reports stay byte-identical across runs.

All randomness is derived from one master seed: stage generators use
``SeedSequence([seed, STAGE, index...])`` with stage ids 0 = corpus,
1 = classifier, 2 = networks.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, fields

import numpy as np

from .adams import QuadVelocityRegressor
from .dagsvm import DagSvmClassifier, evaluate_classifier
from .evaluation import PredictionCase, compare_recognition
from .fusion import (
    FlightFrame,
    FlightState,
    feature_matrix,
    fuse,
    window_features,
)
from .mlp import MlpRegressor, transition_dataset
from .pca import FeatureScaler, PrincipalComponents
from .simgen import FlightScenario, LabeledFlight, SensorNoise, generate_corpus
from .telemetry import preprocess

STAGE_CORPUS = 0
STAGE_CLASSIFIER = 1
STAGE_NETWORKS = 2


@dataclass
class PipelineConfig:
    """Every stage default in one place; the config file and CLI override it."""

    # simulate
    duration: float = 12.0
    period: float = 0.1
    noise_gps: float = 0.5
    noise_pressure: float = 5.0
    noise_gyro: float = 0.01
    noise_accel: float = 0.05
    # preprocess
    sigma: float = 3.0
    smooth: float = 0.5
    # features
    window: int = 20
    stride: int = 10
    # pca
    ratio: float = 0.85
    standardize: bool = True
    # svm
    svm_c: float = 10.0
    gamma: float | str = "scale"
    svm_tol: float = 1e-3
    # mlp
    lr: float = 0.001
    epochs: int = 5000
    hidden: int = 8
    # prediction
    h: float = 0.1
    steps: int = 50
    coverage: float = 1.0
    curve_samples: int = 64
    # reproduce protocol
    per_state: int = 200
    train_fraction: float = 0.8
    context_ticks: int = 60
    seed: int = 3

    def validate(self) -> None:
        checks = [
            (self.duration > 0, "duration must be positive"),
            (self.period > 0, "period must be positive"),
            (self.sigma > 0, "sigma must be positive"),
            (0.0 <= self.smooth <= 1.0, "smooth must be in [0, 1]"),
            (self.window >= 2, "window must be at least 2"),
            (self.stride >= 1, "stride must be at least 1"),
            (0.0 < self.ratio <= 1.0, "ratio must be in (0, 1]"),
            (self.svm_c > 0, "svm C must be positive"),
            (self.lr > 0, "learning rate must be positive"),
            (self.epochs >= 0, "epochs cannot be negative"),
            (self.hidden >= 1, "hidden units must be at least 1"),
            (self.h > 0, "step size must be positive"),
            (self.steps >= 1, "steps must be at least 1"),
            (self.per_state >= 1, "per-state count must be at least 1"),
            (0.0 < self.train_fraction < 1.0, "train fraction must be in (0, 1)"),
            (self.context_ticks >= self.window, "context shorter than one window"),
            (min(self.noise_gps, self.noise_pressure, self.noise_gyro,
                 self.noise_accel) >= 0, "noise levels cannot be negative"),
        ]
        for ok, message in checks:
            if not ok:
                raise ValueError(message)


CONFIG_SECTIONS = {
    "simulate": (
        "duration", "period", "noise_gps", "noise_pressure", "noise_gyro",
        "noise_accel",
    ),
    "preprocess": ("sigma", "smooth"),
    "features": ("window", "stride"),
    "pca": ("ratio", "standardize"),
    "svm": ("svm_c", "gamma", "svm_tol"),
    "mlp": ("lr", "epochs", "hidden"),
    "adams": ("h", "steps", "coverage", "curve_samples"),
    "reproduce": ("per_state", "train_fraction", "context_ticks", "seed"),
}

_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def resolve_gamma(gamma, projected: np.ndarray):
    """Turn the symbolic gamma settings into a number for the classifier.

    'scale' is 1 over the total variance of the projected training matrix:
    the projection's axis variances are the covariance eigenvalues, so the
    plain 1/k ('auto') leaves the kernel far too narrow there and the bias
    term ends up deciding every slightly novel window.
    """
    if gamma == "scale":
        return 1.0 / float(projected.var(axis=0).sum())
    return gamma


def _coerce(name: str, raw: str):
    if name == "gamma":
        return raw if raw in ("auto", "scale") else float(raw)
    kind = _FIELD_TYPES[name]
    if kind == "int":
        return int(raw)
    if kind == "bool":
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return float(raw)


def load_config(path) -> PipelineConfig:
    """Parse the sectioned key=value config file into a PipelineConfig."""
    import configparser

    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as handle:
        parser.read_file(handle)
    config = PipelineConfig()
    for section, keys in CONFIG_SECTIONS.items():
        if not parser.has_section(section):
            continue
        for key in keys:
            # file keys drop the section prefix, e.g. [svm] c = 10
            file_key = key[len(section) + 1 :] if key.startswith(section + "_") else key
            if parser.has_option(section, file_key):
                setattr(config, key, _coerce(name=key, raw=parser.get(section, file_key)))
    config.validate()
    return config


def scenario_from_config(config: PipelineConfig) -> FlightScenario:
    return FlightScenario(
        state=FlightState.LEVEL,
        duration=config.duration,
        period_T=config.period,
        noise=SensorNoise(
            gps=config.noise_gps,
            pressure=config.noise_pressure,
            gyro=config.noise_gyro,
            accel=config.noise_accel,
        ),
    )


def derive_seed(master: int, stage: int, *extra: int) -> int:
    return int(np.random.SeedSequence([master, stage, *extra]).generate_state(1)[0])


@dataclass
class ProcessedFlight:
    """A corpus flight after cleaning, fusion and windowing.

    ``frames`` and ``truth`` are aligned tick for tick; both drop the
    smoother's warm-up so transient-distorted windows never enter the
    experiment.
    """

    flight: LabeledFlight
    frames: list[FlightFrame]
    truth: list[FlightFrame]
    windows: list


# ticks discarded after fusion; the recursive smoother needs about ten
# ticks to converge from its first-sample initialization
WARMUP_TICKS = 10


def process_corpus(
    corpus: list[LabeledFlight], config: PipelineConfig
) -> list[ProcessedFlight]:
    out = []
    for flight in corpus:
        clean = preprocess(flight.stream, sigma_k=config.sigma, smooth_m=config.smooth)
        frames = fuse(clean)[WARMUP_TICKS:]
        windows = window_features(
            frames, config.window, config.stride, label=flight.state
        )
        out.append(
            ProcessedFlight(
                flight=flight,
                frames=frames,
                truth=flight.truth[WARMUP_TICKS:],
                windows=windows,
            )
        )
    return out


def split_by_state(
    processed: list[ProcessedFlight], train_fraction: float
) -> tuple[list[ProcessedFlight], list[ProcessedFlight]]:
    """Stratified flight-level split; windows of one flight never straddle it."""
    train, test = [], []
    for state in FlightState:
        group = [p for p in processed if p.flight.state is state]
        n_train = int(round(train_fraction * len(group)))
        n_train = min(max(n_train, 1), len(group) - 1) if len(group) > 1 else len(group)
        train.extend(group[:n_train])
        test.extend(group[n_train:])
    return train, test


@dataclass
class RecognitionModel:
    """Scaler + projection + DAG classifier, the deployable recognizer."""

    scaler: FeatureScaler | None
    pca: PrincipalComponents
    classifier: DagSvmClassifier
    window_len: int

    def project(self, X: np.ndarray) -> np.ndarray:
        if self.scaler is not None:
            X = self.scaler.transform(X)
        return self.pca.transform(X)

    def recognize(self, frames: list[FlightFrame]) -> FlightState:
        """Classify the most recent full window of a frame sequence."""
        recent = frames[-self.window_len :]
        vector = window_features(recent, self.window_len, self.window_len)[0].values
        label = self.classifier.predict(self.project(vector[np.newaxis, :]))[0]
        return FlightState(str(label))


def train_recognition(
    train_windows, config: PipelineConfig
) -> RecognitionModel:
    X = feature_matrix(train_windows)
    labels = [w.label.value for w in train_windows]
    scaler = FeatureScaler().fit(X) if config.standardize else None
    Xs = scaler.transform(X) if scaler is not None else X
    pca = PrincipalComponents(target_ratio=config.ratio).fit(Xs)
    projected = pca.transform(Xs)
    gamma = resolve_gamma(config.gamma, projected)
    classifier = DagSvmClassifier(
        C=config.svm_c,
        kernel="rbf",
        gamma=gamma,
        tol=config.svm_tol,
        seed=derive_seed(config.seed, STAGE_CLASSIFIER),
    ).fit(projected, labels)
    return RecognitionModel(
        scaler=scaler, pca=pca, classifier=classifier, window_len=config.window
    )


def classification_report(
    model: RecognitionModel, windows, split_name: str
) -> dict:
    X = model.project(feature_matrix(windows))
    truth = [w.label.value for w in windows]
    predicted = model.classifier.predict(X)
    confusion, metrics = evaluate_classifier(
        truth, predicted, labels=[s.value for s in FlightState]
    )
    accuracy = float(np.mean(np.asarray(truth) == np.asarray(predicted)))
    return {
        "split": split_name,
        "n_windows": len(windows),
        "accuracy": accuracy,
        "per_state": metrics,
        "confusion": confusion.to_dict(),
    }


def train_predictors(
    train_flights: list[ProcessedFlight], config: PipelineConfig
) -> tuple[dict, QuadVelocityRegressor, dict, MlpRegressor]:
    """Per-state and global models for both prediction methods."""
    adams_by_state: dict[FlightState, QuadVelocityRegressor] = {}
    mlp_by_state: dict[FlightState, MlpRegressor] = {}
    all_frames: list[FlightFrame] = []
    for idx, state in enumerate(FlightState):
        frames: list[FlightFrame] = []
        for p in train_flights:
            if p.flight.state is state:
                frames.extend(p.frames)
        all_frames.extend(frames)
        adams_by_state[state] = QuadVelocityRegressor().fit(frames)
        X, Y = _pooled_transitions(
            [p.frames for p in train_flights if p.flight.state is state]
        )
        mlp_by_state[state] = MlpRegressor(
            hidden_units=config.hidden,
            learning_rate=config.lr,
            epochs=config.epochs,
            seed=derive_seed(config.seed, STAGE_NETWORKS, idx),
        ).fit(X, Y)
    adams_global = QuadVelocityRegressor().fit(all_frames)
    Xg, Yg = _pooled_transitions([p.frames for p in train_flights])
    mlp_global = MlpRegressor(
        hidden_units=config.hidden,
        learning_rate=config.lr,
        epochs=config.epochs,
        seed=derive_seed(config.seed, STAGE_NETWORKS, len(FlightState)),
    ).fit(Xg, Yg)
    return adams_by_state, adams_global, mlp_by_state, mlp_global


def _pooled_transitions(frame_lists) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = [], []
    for frames in frame_lists:
        X, Y = transition_dataset(frames)
        xs.append(X)
        ys.append(Y)
    return np.vstack(xs), np.vstack(ys)


def build_cases(
    test_flights: list[ProcessedFlight], config: PipelineConfig
) -> list[PredictionCase]:
    cases = []
    for p in test_flights:
        end = config.context_ticks + config.steps
        if end > len(p.frames):
            raise ValueError(
                f"flight too short: need {end} ticks, have {len(p.frames)}"
            )
        future = np.array(
            [
                (f.t, f.pos[0], f.pos[1], f.pos[2])
                for f in p.truth[config.context_ticks : end]
            ]
        )
        cases.append(
            PredictionCase(
                true_state=p.flight.state,
                context=p.frames[: config.context_ticks],
                future=future,
            )
        )
    return cases


def run_reproduce(config: PipelineConfig) -> tuple[dict, dict]:
    """Full experiment; returns (report, stage timings in seconds)."""
    config.validate()
    timings: dict[str, float] = {}
    t0 = time.monotonic()
    corpus = generate_corpus(
        per_state=config.per_state,
        seed=derive_seed(config.seed, STAGE_CORPUS),
        window_len=config.window,
        stride=config.stride,
        base=scenario_from_config(config),
        discard_ticks=WARMUP_TICKS,
    )
    timings["corpus"] = time.monotonic() - t0

    t1 = time.monotonic()
    processed = process_corpus(corpus, config)
    train_flights, test_flights = split_by_state(processed, config.train_fraction)
    timings["preprocess_features"] = time.monotonic() - t1

    t2 = time.monotonic()
    train_windows = [w for p in train_flights for w in p.windows]
    test_windows = [w for p in test_flights for w in p.windows]
    recognition = train_recognition(train_windows, config)
    train_report = classification_report(recognition, train_windows, "train")
    test_report = classification_report(recognition, test_windows, "test")
    timings["classification"] = time.monotonic() - t2
    timings["classification_total"] = time.monotonic() - t0

    t3 = time.monotonic()
    adams_by_state, adams_global, mlp_by_state, mlp_global = train_predictors(
        train_flights, config
    )
    timings["predictors"] = time.monotonic() - t3

    t4 = time.monotonic()
    cases = build_cases(test_flights, config)
    comparison = compare_recognition(
        cases,
        adams_by_state,
        adams_global,
        mlp_by_state,
        mlp_global,
        recognition.recognize,
        h=config.period,
    )
    timings["comparison"] = time.monotonic() - t4
    timings["total"] = time.monotonic() - t0

    improvement = {}
    for method, arms in comparison["methods"].items():
        without = arms["without"]["overall_mu"]
        with_ = arms["with"]["overall_mu"]
        improvement[method] = (without - with_) / without if without > 0 else 0.0

    report = {
        "seed": config.seed,
        "parameters": {
            "per_state": config.per_state,
            "window": config.window,
            "stride": config.stride,
            "ratio": config.ratio,
            "svm_c": config.svm_c,
            "gamma": config.gamma,
            "lr": config.lr,
            "epochs": config.epochs,
            "hidden": config.hidden,
            "steps": config.steps,
            "context_ticks": config.context_ticks,
            "train_fraction": config.train_fraction,
        },
        "classification": {
            "pca_components": recognition.pca.n_components_,
            "retained_ratio": recognition.pca.retained_ratio_,
            "n_train_windows": len(train_windows),
            "n_test_windows": len(test_windows),
            "train": train_report,
            "test": test_report,
        },
        "prediction": {
            "recognition_accuracy": comparison["recognition_accuracy"],
            "n_cases": comparison["n_cases"],
            "methods": comparison["methods"],
            "improvement": improvement,
        },
    }
    return report, timings
