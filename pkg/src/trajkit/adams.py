"""State-conditioned trajectory prediction by velocity-field integration.

Each axis gets a six-coefficient quadratic regression of velocity against its
own coordinate and time,

    v = a*s**2 + b*t**2 + c*s*t + d*s + e*t + f,

fitted by least squares. Prediction integrates the three decoupled scalar
ODEs ds/dt = v(t, s) with a four-step Adams-Bashforth predictor and a single
Adams-Moulton corrector pass (PECE), bootstrapped by three classical
four-stage one-step steps. Optionally every predicted point carries a
spatial uncertainty circle: its radius comes from the regression
prediction-interval formula combined across axes, its plane is orthogonal to
the local travel direction via two composed plane rotations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .errors import (
    DegenerateDirection,
    DegenerateSpread,
    FieldBlowup,
    InsufficientData,
    SingularDesign,
)
from .fusion import FlightFrame, FlightState

AXES = ("x", "y", "z")
N_COEFFICIENTS = 6


@dataclass(frozen=True)
class AxisStats:
    """Per-axis regression statistics feeding the interval radius."""

    n: int
    mean: float
    sum_sq_dev: float
    s: float  # residual standard error

    def to_dict(self) -> dict:
        return {"n": self.n, "mean": self.mean, "sum_sq_dev": self.sum_sq_dev, "s": self.s}

    @classmethod
    def from_dict(cls, payload: dict) -> "AxisStats":
        return cls(
            n=int(payload["n"]),
            mean=float(payload["mean"]),
            sum_sq_dev=float(payload["sum_sq_dev"]),
            s=float(payload["s"]),
        )


def _design(s: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.column_stack([s * s, t * t, s * t, s, t, np.ones_like(s)])


def _solve_least_squares(
    s: np.ndarray, t: np.ndarray, v: np.ndarray, ridge_scale: float
) -> np.ndarray:
    """Normal-equation solve in standardized variables with a ridge fallback.

    Standardizing s and t before forming the quadratic terms keeps the
    normal matrix well conditioned for raw flight data (positions in the
    hundreds of metres); the coefficients are mapped back to raw variables
    afterwards, which the quadratic model class permits exactly.
    """
    s_mu, t_mu = float(np.mean(s)), float(np.mean(t))
    s_sd = float(np.std(s))
    t_sd = float(np.std(t))
    # spread at rounding-dust level counts as constant (same rule as the
    # feature normalizers), otherwise the rescaling amplifies noise
    if s_sd <= 1e-9 * max(1.0, abs(s_mu)):
        s_sd = 1.0
    if t_sd <= 1e-9 * max(1.0, abs(t_mu)):
        t_sd = 1.0
    sn = (s - s_mu) / s_sd
    tn = (t - t_mu) / t_sd
    X = _design(sn, tn)
    A = X.T @ X
    rhs = X.T @ v
    beta = None
    try:
        candidate = np.linalg.solve(A, rhs)
        if np.all(np.isfinite(candidate)):
            beta = candidate
    except np.linalg.LinAlgError:
        beta = None
    if beta is None or np.linalg.norm(A @ beta - rhs) > 1e-6 * (
        np.linalg.norm(rhs) + 1.0
    ):
        lam = ridge_scale * max(np.trace(A) / A.shape[0], 1.0)
        try:
            beta = np.linalg.solve(A + lam * np.eye(A.shape[0]), rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularDesign("design matrix singular beyond ridge rescue") from exc
        if not np.all(np.isfinite(beta)):
            raise SingularDesign("ridge solution is non-finite")
    return _expand_scaled(beta, s_mu, s_sd, t_mu, t_sd)


def _expand_scaled(
    beta: np.ndarray, p: float, q: float, u: float, w: float
) -> np.ndarray:
    """Map coefficients fitted on (s-p)/q, (t-u)/w back to raw s, t."""
    A, B, Cc, D, E, F = beta
    a = A / q**2
    b = B / w**2
    c = Cc / (q * w)
    d = -2.0 * A * p / q**2 - Cc * u / (q * w) + D / q
    e = -2.0 * B * u / w**2 - Cc * p / (q * w) + E / w
    f = (
        A * p**2 / q**2
        + B * u**2 / w**2
        + Cc * p * u / (q * w)
        - D * p / q
        - E * u / w
        + F
    )
    return np.array([a, b, c, d, e, f])


def evaluate_field(coef: np.ndarray, t: float, s: float) -> float:
    """Evaluate the quadratic velocity model at time t and coordinate s."""
    a, b, c, d, e, f = coef
    return a * s * s + b * t * t + c * s * t + d * s + e * t + f


class QuadVelocityRegressor(BaseEstimator, RegressorMixin):
    """Per-axis quadratic velocity regression over a frame sequence.

    Parameters
    ----------
    ridge_scale : float, default 1e-8
        Relative Tikhonov weight used only when the plain normal-equation
        solve fails or is inconsistent.

    Attributes (after fit)
    ----------------------
    coef_ : dict axis -> (6,) coefficients in raw variables.
    residual_rms_ : dict axis -> RMS of velocity residuals.
    stats_ : dict axis -> AxisStats for the interval radius.
    """

    def __init__(self, ridge_scale: float = 1e-8):
        self.ridge_scale = ridge_scale

    def fit(self, frames: Sequence[FlightFrame], y=None):
        if len(frames) < N_COEFFICIENTS:
            raise InsufficientData(
                f"need at least {N_COEFFICIENTS} frames, got {len(frames)}"
            )
        t = np.array([f.t for f in frames])
        pos = np.array([f.pos for f in frames])
        vel = np.array([f.vel for f in frames])
        self.coef_ = {}
        self.residual_rms_ = {}
        self.stats_ = {}
        self.envelope_ = {}
        for k, axis in enumerate(AXES):
            s, v = pos[:, k], vel[:, k]
            coef = _solve_least_squares(s, t, v, self.ridge_scale)
            residuals = v - _design(s, t) @ coef
            n = s.size
            rss = float(residuals @ residuals)
            self.coef_[axis] = coef
            self.residual_rms_[axis] = float(np.sqrt(rss / n))
            self.stats_[axis] = AxisStats(
                n=n,
                mean=float(np.mean(s)),
                sum_sq_dev=float(np.sum((s - np.mean(s)) ** 2)),
                s=float(np.sqrt(rss / max(n - N_COEFFICIENTS, 1))),
            )
            lo, hi = float(np.min(s)), float(np.max(s))
            pad = 0.25 * (hi - lo) + 1e-6
            self.envelope_[axis] = (lo - pad, hi + pad)
        return self

    def field(self, axis: str) -> Callable[[float, float], float]:
        """Velocity field for one axis, trusted only inside the fit envelope.

        The quadratic is evaluated with the coordinate clamped to the padded
        training range; an unclamped quadratic grows without bound once the
        integration drifts outside the data and the feedback then diverges in
        a handful of steps.
        """
        self._check_fitted()
        coef = self.coef_[axis]
        lo, hi = self.envelope_[axis]
        return lambda t, s: evaluate_field(coef, t, min(max(s, lo), hi))

    def predict(self, X):
        """Velocity triples for rows of (t, x, y, z)."""
        self._check_fitted()
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty((X.shape[0], 3))
        for k, axis in enumerate(AXES):
            out[:, k] = [
                evaluate_field(self.coef_[axis], row[0], row[1 + k]) for row in X
            ]
        return out

    def _check_fitted(self):
        if not hasattr(self, "coef_"):
            raise NotFittedError("QuadVelocityRegressor instance is not fitted")

    def to_dict(self) -> dict:
        self._check_fitted()
        return {
            "coefficients": {axis: self.coef_[axis].tolist() for axis in AXES},
            "residual_rms": dict(self.residual_rms_),
            "stats": {axis: self.stats_[axis].to_dict() for axis in AXES},
            "envelope": {axis: list(self.envelope_[axis]) for axis in AXES},
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "QuadVelocityRegressor":
        model = cls()
        model.coef_ = {
            axis: np.asarray(values, dtype=float)
            for axis, values in payload["coefficients"].items()
        }
        model.residual_rms_ = {k: float(v) for k, v in payload["residual_rms"].items()}
        model.stats_ = {
            axis: AxisStats.from_dict(entry)
            for axis, entry in payload["stats"].items()
        }
        model.envelope_ = {
            axis: (float(pair[0]), float(pair[1]))
            for axis, pair in payload["envelope"].items()
        }
        return model


def rk4_step(
    f: Callable[[float, float], float], t: float, y: float, h: float
) -> float:
    """Classical four-stage one-step advance used to bootstrap the multistep."""
    k1 = f(t, y)
    k2 = f(t + h / 2.0, y + h * k1 / 2.0)
    k3 = f(t + h / 2.0, y + h * k2 / 2.0)
    k4 = f(t + h, y + h * k3)
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def abm4_step(
    f: Callable[[float, float], float],
    history: Sequence[tuple[float, float, float]],
    h: float,
) -> tuple[float, float]:
    """One predictor-corrector advance from four (t, y, f) history entries.

    Predictor: y0 = y_n + h/24 * (55 f_n - 59 f_{n-1} + 37 f_{n-2} - 9 f_{n-3})
    Corrector: y  = y_n + h/24 * (9 f(t_{n+1}, y0) + 19 f_n - 5 f_{n-1} + f_{n-2})

    The corrector is applied exactly once.
    """
    if len(history) != 4:
        raise InsufficientData("ABM4 needs exactly 4 history entries")
    (_, _, f3), (_, _, f2), (_, _, f1), (t0, y0, f0) = history
    t_next = t0 + h
    predictor = y0 + h / 24.0 * (55.0 * f0 - 59.0 * f1 + 37.0 * f2 - 9.0 * f3)
    f_pred = f(t_next, predictor)
    if not np.isfinite(f_pred):
        raise FieldBlowup(f"field non-finite at t={t_next}")
    corrected = y0 + h / 24.0 * (9.0 * f_pred + 19.0 * f0 - 5.0 * f1 + f2)
    return t_next, corrected


def integrate_axis(
    f: Callable[[float, float], float],
    t0: float,
    y0: float,
    h: float,
    steps: int,
) -> np.ndarray:
    """Integrate dy/dt = f(t, y): RK4 for the first 3 steps, then ABM4-PECE.

    Returns ``steps + 1`` values including the start. Timestamps are always
    formed as t0 + i*h, never by accumulation.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if not h > 0:
        raise ValueError("step size must be positive")
    values = np.empty(steps + 1)
    values[0] = y0
    history: list[tuple[float, float, float]] = []
    fy = f(t0, y0)
    if not np.isfinite(fy):
        raise FieldBlowup("field non-finite at the start point")
    history.append((t0, y0, fy))
    for i in range(1, steps + 1):
        t_prev = t0 + (i - 1) * h
        if len(history) < 4:
            y_next = rk4_step(f, t_prev, values[i - 1], h)
        else:
            _, y_next = abm4_step(f, history[-4:], h)
        if not np.isfinite(y_next):
            raise FieldBlowup(f"integration diverged at step {i}")
        t_next = t0 + i * h
        f_next = f(t_next, y_next)
        if not np.isfinite(f_next):
            raise FieldBlowup(f"field non-finite at step {i}")
        values[i] = y_next
        history.append((t_next, y_next, f_next))
    return values


def axis_radius(stats: AxisStats, x0: float, coverage_multiplier: float = 1.0) -> float:
    """Prediction-interval radius for one axis at coordinate ``x0``."""
    if stats.n < 2:
        raise InsufficientData("interval radius needs at least 2 samples")
    if stats.sum_sq_dev <= 0.0:
        raise DegenerateSpread("zero coordinate spread in regression stats")
    return (
        coverage_multiplier
        * stats.s
        * float(np.sqrt(1.0 + 1.0 / stats.n + (x0 - stats.mean) ** 2 / stats.sum_sq_dev))
    )


def confidence_radius(
    stats: dict[str, AxisStats],
    position: Sequence[float],
    coverage_multiplier: float = 1.0,
) -> float:
    """Combined interval radius: root-sum-square of the three axis radii."""
    radii = [
        axis_radius(stats[axis], float(position[k]), coverage_multiplier)
        for k, axis in enumerate(AXES)
    ]
    return float(np.sqrt(sum(r * r for r in radii)))


@dataclass(frozen=True)
class ConfidenceCurve:
    """A circle of radius ``radius`` around ``center``, orthogonal to ``direction``."""

    center: np.ndarray
    radius: float
    direction: np.ndarray
    sample_points: np.ndarray


def travel_rotation(direction: np.ndarray) -> np.ndarray:
    """Rotation mapping ``direction`` onto the vertical axis.

    Product of a rotation about the vertical axis (angle from atan2 of the
    horizontal components) and a rotation in the resulting vertical plane.
    Two-argument angles keep every octant correct, including the degenerate
    straight-up and straight-down directions where the horizontal part
    vanishes.
    """
    a, b, c = direction
    beta = np.arctan2(b, a)
    rho = np.hypot(a, b)
    alpha = np.arctan2(-rho, c)
    rot_z = np.array(
        [
            [np.cos(beta), np.sin(beta), 0.0],
            [-np.sin(beta), np.cos(beta), 0.0],
            [0.0, 0.0, 1.0],
        ]
    )
    rot_y = np.array(
        [
            [np.cos(alpha), 0.0, np.sin(alpha)],
            [0.0, 1.0, 0.0],
            [-np.sin(alpha), 0.0, np.cos(alpha)],
        ]
    )
    return rot_y @ rot_z


def confidence_curve(
    p0: Sequence[float],
    p1: Sequence[float],
    radius: float,
    n_samples: int = 64,
) -> ConfidenceCurve:
    """Sampled uncertainty circle centred at ``p1``, normal to travel direction.

    The reference circle lives in the horizontal plane; the inverse of the
    travel rotation carries it into the plane orthogonal to ``p1 - p0`` and
    the circle is then shifted to ``p1``.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    if n_samples < 3:
        raise ValueError("need at least 3 samples on the circle")
    start = np.asarray(p0, dtype=float)
    center = np.asarray(p1, dtype=float)
    chord = center - start
    norm = float(np.linalg.norm(chord))
    if norm == 0.0:
        raise DegenerateDirection("coincident points give no travel direction")
    direction = chord / norm
    g = travel_rotation(direction)
    angles = 2.0 * np.pi * np.arange(n_samples) / n_samples
    template = np.column_stack(
        [radius * np.cos(angles), radius * np.sin(angles), np.zeros(n_samples)]
    )
    points = template @ g + center  # rows @ G equals G^-1 applied per column
    return ConfidenceCurve(
        center=center, radius=float(radius), direction=direction, sample_points=points
    )


@dataclass
class TrajectoryPrediction:
    """Predicted track: timestamps, 3-D points, optional uncertainty data."""

    times: np.ndarray
    points: np.ndarray
    method: str
    state: FlightState | None = None
    radii: np.ndarray | None = None
    curves: list[ConfidenceCurve | None] | None = None


def predict_trajectory(
    model: QuadVelocityRegressor,
    t0: float,
    pos0: Sequence[float],
    h: float,
    steps: int,
    with_confidence: bool = False,
    coverage_multiplier: float = 1.0,
    n_curve_samples: int = 64,
    state: FlightState | None = None,
) -> TrajectoryPrediction:
    """Integrate the fitted per-axis fields forward from (t0, pos0).

    Returns ``steps + 1`` points including the start. With confidence
    enabled, each point gets a combined interval radius recomputed from the
    frozen regression statistics at that point's own coordinates, and every
    point after the first carries a sampled circle orthogonal to the segment
    arriving at it.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    model._check_fitted()
    tracks = [
        integrate_axis(model.field(axis), t0, float(pos0[k]), h, steps)
        for k, axis in enumerate(AXES)
    ]
    points = np.column_stack(tracks)
    times = t0 + h * np.arange(steps + 1)
    radii = None
    curves: list[ConfidenceCurve | None] | None = None
    if with_confidence:
        radii = np.array(
            [
                confidence_radius(model.stats_, points[i], coverage_multiplier)
                for i in range(points.shape[0])
            ]
        )
        curves = [None]
        for i in range(1, points.shape[0]):
            if np.array_equal(points[i - 1], points[i]):
                curves.append(None)  # stationary segment, no direction
                continue
            curves.append(
                confidence_curve(points[i - 1], points[i], radii[i], n_curve_samples)
            )
    return TrajectoryPrediction(
        times=times,
        points=points,
        method="adams",
        state=state,
        radii=radii,
        curves=curves,
    )
