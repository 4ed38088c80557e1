"""Small feed-forward network predictor trained by full-batch backprop.

One hidden rectifier layer, identity output, mean-squared-error objective.
Inputs and targets are standardized per feature before training and the
forward pass denormalizes on the way out. Training is plain gradient
descent, bitwise deterministic for a fixed seed and sample order.

The step-transition convention: input is (t, x, y, z, vx, vy, vz) at one
tick, target is the position step to the next tick plus the next-tick
speed. ``rollout`` feeds predictions back to produce a multi-step
trajectory, rebuilding the velocity input from predicted speed and step
direction.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .errors import DivergedTraining, DimensionError, InsufficientData, InvalidData
from .adams import TrajectoryPrediction
from .fusion import FlightFrame, FlightState

N_INPUTS = 7
N_OUTPUTS = 4


def init_params(
    rng: np.random.Generator, n_in: int, hidden: int, n_out: int
) -> dict[str, np.ndarray]:
    """Symmetric uniform weight init with limit sqrt(6 / (fan_in + fan_out)).

    Hidden biases start at +1 so every rectifier unit is active across the
    standardized data range; plain gradient descent then refines an
    initially linear map instead of dragging kinks through the data, which
    stalls an order of magnitude short on near-affine targets.
    """
    s1 = np.sqrt(6.0 / (n_in + hidden))
    s2 = np.sqrt(6.0 / (hidden + n_out))
    return {
        "w1": rng.uniform(-s1, s1, size=(n_in, hidden)),
        "b1": np.ones(hidden),
        "w2": rng.uniform(-s2, s2, size=(hidden, n_out)),
        "b2": np.zeros(n_out),
    }


def forward(params: dict[str, np.ndarray], X: np.ndarray) -> np.ndarray:
    hidden = np.maximum(X @ params["w1"] + params["b1"], 0.0)
    return hidden @ params["w2"] + params["b2"]


def loss_and_grads(
    params: dict[str, np.ndarray], X: np.ndarray, Y: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """MSE over all output entries and its exact gradients."""
    pre = X @ params["w1"] + params["b1"]
    hidden = np.maximum(pre, 0.0)
    out = hidden @ params["w2"] + params["b2"]
    diff = out - Y
    loss = float(np.mean(diff * diff))
    scale = 2.0 / diff.size
    d_out = scale * diff
    grads = {
        "w2": hidden.T @ d_out,
        "b2": d_out.sum(axis=0),
    }
    d_hidden = d_out @ params["w2"].T
    d_hidden[pre <= 0.0] = 0.0
    grads["w1"] = X.T @ d_hidden
    grads["b1"] = d_hidden.sum(axis=0)
    return loss, grads


class Normalization:
    """Per-feature affine map fitted once; round-trips exactly."""

    def __init__(self, mean: np.ndarray, scale: np.ndarray):
        self.mean = mean
        self.scale = scale

    @classmethod
    def fit(cls, data: np.ndarray) -> "Normalization":
        mean = data.mean(axis=0)
        scale = data.std(axis=0)
        # float-dust spread must count as constant or it amplifies noise
        degenerate = scale <= 1e-9 * np.maximum(1.0, np.abs(mean))
        scale[degenerate] = 1.0
        return cls(mean, scale)

    @classmethod
    def identity(cls, width: int) -> "Normalization":
        return cls(np.zeros(width), np.ones(width))

    def apply(self, data: np.ndarray) -> np.ndarray:
        return (data - self.mean) / self.scale

    def invert(self, data: np.ndarray) -> np.ndarray:
        return data * self.scale + self.mean


class MlpRegressor(BaseEstimator, RegressorMixin):
    """Feed-forward regressor with one rectifier hidden layer.

    Parameters
    ----------
    hidden_units : int, default 8
    learning_rate : float, default 0.001
    epochs : int, default 5000
    seed : int, default 0
    """

    def __init__(
        self,
        hidden_units: int = 8,
        learning_rate: float = 0.001,
        epochs: int = 5000,
        seed: int = 0,
    ):
        self.hidden_units = hidden_units
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.seed = seed

    def fit(self, X, Y):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if X.shape[0] < 1:
            raise InsufficientData("need at least one training sample")
        if X.shape[0] != Y.shape[0]:
            raise DimensionError("X and Y row counts differ")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise InvalidData("training data contains non-finite values")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs cannot be negative")
        self.input_norm_ = Normalization.fit(X)
        self.output_norm_ = Normalization.fit(Y)
        Xn = self.input_norm_.apply(X)
        Yn = self.output_norm_.apply(Y)
        rng = np.random.default_rng(self.seed)
        params = init_params(rng, X.shape[1], self.hidden_units, Y.shape[1])
        for _ in range(self.epochs):
            loss, grads = loss_and_grads(params, Xn, Yn)
            if not np.isfinite(loss):
                raise DivergedTraining("loss became non-finite")
            for key in params:
                params[key] = params[key] - self.learning_rate * grads[key]
        final = float(np.mean((forward(params, Xn) - Yn) ** 2))
        if not np.isfinite(final):
            raise DivergedTraining("loss became non-finite")
        self.params_ = params
        self.final_loss_ = final
        self.n_features_in_ = X.shape[1]
        self.n_outputs_ = Y.shape[1]
        self.input_range_ = (X.min(axis=0), X.max(axis=0))
        return self

    def predict(self, X):
        self._check_fitted()
        x = np.asarray(X, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[np.newaxis, :]
        if x.shape[1] != self.n_features_in_:
            raise DimensionError(
                f"expected {self.n_features_in_} features, got {x.shape[1]}"
            )
        if not np.all(np.isfinite(x)):
            raise InvalidData("prediction input contains non-finite values")
        out = self.output_norm_.invert(forward(self.params_, self.input_norm_.apply(x)))
        return out[0] if single else out

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise NotFittedError("MlpRegressor instance is not fitted")

    def to_dict(self) -> dict:
        self._check_fitted()
        return {
            "hidden_units": self.hidden_units,
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "seed": self.seed,
            "final_loss": self.final_loss_,
            "input_low": self.input_range_[0].tolist(),
            "input_high": self.input_range_[1].tolist(),
            "weights1": self.params_["w1"].tolist(),
            "bias1": self.params_["b1"].tolist(),
            "weights2": self.params_["w2"].tolist(),
            "bias2": self.params_["b2"].tolist(),
            "input_mean": self.input_norm_.mean.tolist(),
            "input_scale": self.input_norm_.scale.tolist(),
            "output_mean": self.output_norm_.mean.tolist(),
            "output_scale": self.output_norm_.scale.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "MlpRegressor":
        model = cls(
            hidden_units=int(payload["hidden_units"]),
            learning_rate=float(payload["learning_rate"]),
            epochs=int(payload["epochs"]),
            seed=int(payload["seed"]),
        )
        model.params_ = {
            "w1": np.asarray(payload["weights1"], dtype=float),
            "b1": np.asarray(payload["bias1"], dtype=float),
            "w2": np.asarray(payload["weights2"], dtype=float),
            "b2": np.asarray(payload["bias2"], dtype=float),
        }
        model.input_norm_ = Normalization(
            np.asarray(payload["input_mean"], dtype=float),
            np.asarray(payload["input_scale"], dtype=float),
        )
        model.output_norm_ = Normalization(
            np.asarray(payload["output_mean"], dtype=float),
            np.asarray(payload["output_scale"], dtype=float),
        )
        model.final_loss_ = float(payload["final_loss"])
        model.n_features_in_ = model.params_["w1"].shape[0]
        model.n_outputs_ = model.params_["w2"].shape[1]
        model.input_range_ = (
            np.asarray(payload["input_low"], dtype=float),
            np.asarray(payload["input_high"], dtype=float),
        )
        return model


def transition_dataset(frames: Sequence[FlightFrame]) -> tuple[np.ndarray, np.ndarray]:
    """Consecutive-tick pairs: (t, pos, vel) now -> (pos step, speed) next.

    The position part of the target is the displacement to the next tick,
    expressed in the current tick's frame; the rollout adds it back to the
    absolute position. An absolute-coordinate target would force the small
    hidden layer to reproduce the identity map over the whole flight
    envelope, and its residual warp (about 1 percent of the range) exceeds
    the per-tick motion itself.
    """
    if len(frames) < 2:
        raise InsufficientData("need at least 2 frames for transitions")
    X = np.array(
        [[f.t, *f.pos, *f.vel] for f in frames[:-1]],
        dtype=float,
    )
    Y = np.array(
        [
            [
                g.pos[0] - f.pos[0],
                g.pos[1] - f.pos[1],
                g.pos[2] - f.pos[2],
                g.speed_mag,
            ]
            for f, g in zip(frames[:-1], frames[1:])
        ],
        dtype=float,
    )
    return X, Y


def rollout(
    model: MlpRegressor,
    start: FlightFrame,
    steps: int,
    period_T: float,
    state: FlightState | None = None,
) -> TrajectoryPrediction:
    """Iterate the one-step predictor ``steps`` times from ``start``.

    Each step adds the predicted displacement to the running position. The
    velocity input is rebuilt as the predicted speed times the displacement's
    unit direction; dividing the raw displacement by the tick period instead
    would amplify every position error tenfold per step and the feedback
    loop would diverge. Fed-back position and velocity inputs are clipped to
    the training envelope: outside it the network's response is arbitrary
    (features constant during training leave their weights unconstrained)
    and any excursion would otherwise be amplified every step.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if not period_T > 0:
        raise ValueError("period_T must be positive")
    times = start.t + period_T * np.arange(steps + 1)
    points = np.empty((steps + 1, 3))
    points[0] = start.pos
    vel = np.asarray(start.vel, dtype=float)
    speed0 = float(np.linalg.norm(vel))
    direction = vel / speed0 if speed0 > 0 else np.zeros(3)
    low, high = model.input_range_
    for i in range(1, steps + 1):
        features = np.concatenate(([times[i - 1]], points[i - 1], vel))
        features[1:] = np.clip(features[1:], low[1:], high[1:])
        predicted = model.predict(features)
        delta = predicted[:3]
        points[i] = points[i - 1] + delta
        speed = max(float(predicted[3]), 0.0)
        norm = float(np.linalg.norm(delta))
        if norm > 0.0:
            direction = delta / norm
        vel = speed * direction
    return TrajectoryPrediction(times=times, points=points, method="mlp", state=state)
