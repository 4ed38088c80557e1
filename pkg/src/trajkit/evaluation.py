"""Trajectory error metrics and the recognition-versus-global comparison.

The error of a predicted track is the mean Euclidean distance between
time-aligned predicted and actual points. The comparison harness runs every
test flight through both prediction methods twice, once dispatched to the
model of the recognized flight state and once through the state-agnostic
global model, then aggregates per state and overall.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import AlignmentError, InsufficientData, InvalidData
from .adams import QuadVelocityRegressor, predict_trajectory
from .fusion import FlightFrame, FlightState
from .mlp import MlpRegressor, rollout

TIMESTAMP_TOLERANCE = 1e-9


def point_distance(actual: Sequence[float], predicted: Sequence[float]) -> float:
    """Euclidean distance between two 3-D points."""
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(p))):
        raise InvalidData("points must be finite")
    return float(np.linalg.norm(a - p))


@dataclass
class ErrorReport:
    """Mean error distance plus the per-point breakdown behind it."""

    mu: float
    distances: np.ndarray
    method: str
    recognition: str | None = None
    per_state: dict[str, float] = field(default_factory=dict)


def trajectory_error(
    actual: np.ndarray,
    predicted: np.ndarray,
    method: str = "adams",
    recognition: str | None = None,
) -> ErrorReport:
    """Mean point distance between two aligned (t, x, y, z) tracks."""
    a = np.atleast_2d(np.asarray(actual, dtype=float))
    p = np.atleast_2d(np.asarray(predicted, dtype=float))
    if a.shape[0] < 1:
        raise InsufficientData("empty trajectory")
    if a.shape[0] != p.shape[0]:
        raise AlignmentError(f"length mismatch: {a.shape[0]} vs {p.shape[0]}")
    if a.shape[1] != 4 or p.shape[1] != 4:
        raise InvalidData("expected rows of (t, x, y, z)")
    if np.max(np.abs(a[:, 0] - p[:, 0])) > TIMESTAMP_TOLERANCE:
        raise AlignmentError("timestamps do not match")
    distances = np.linalg.norm(a[:, 1:] - p[:, 1:], axis=1)
    return ErrorReport(
        mu=float(distances.mean()),
        distances=distances,
        method=method,
        recognition=recognition,
    )


@dataclass(frozen=True)
class PredictionCase:
    """One test flight ready for the comparison harness."""

    true_state: FlightState
    context: list[FlightFrame]  # frames available before the prediction start
    future: np.ndarray  # (steps, 4) rows of (t, x, y, z) ground truth


def _as_track(times: np.ndarray, points: np.ndarray) -> np.ndarray:
    return np.column_stack([times, points])


def compare_recognition(
    cases: Sequence[PredictionCase],
    adams_by_state: dict[FlightState, QuadVelocityRegressor],
    adams_global: QuadVelocityRegressor,
    mlp_by_state: dict[FlightState, MlpRegressor],
    mlp_global: MlpRegressor,
    recognize: Callable[[list[FlightFrame]], FlightState],
    h: float,
) -> dict:
    """Error table for both methods, with and without state recognition.

    Returns a nested dict: method -> arm ('with'/'without') -> overall mu,
    per-state mu and case counts, plus recognition accuracy over the cases.
    """
    if not cases:
        raise InsufficientData("no prediction cases")
    for state in FlightState:
        if state not in adams_by_state or state not in mlp_by_state:
            raise InvalidData(f"missing per-state model for {state.value}")
    rows: list[dict] = []
    hits = 0
    for case in cases:
        recognized = recognize(case.context)
        hits += recognized is case.true_state
        start = case.context[-1]
        steps = case.future.shape[0]
        predictions = {
            ("adams", "with"): predict_trajectory(
                adams_by_state[recognized], start.t, start.pos, h, steps
            ),
            ("adams", "without"): predict_trajectory(
                adams_global, start.t, start.pos, h, steps
            ),
            ("mlp", "with"): rollout(mlp_by_state[recognized], start, steps, h),
            ("mlp", "without"): rollout(mlp_global, start, steps, h),
        }
        for (method, arm), track in predictions.items():
            predicted = _as_track(track.times[1:], track.points[1:])
            report = trajectory_error(case.future, predicted, method, arm)
            rows.append(
                {
                    "method": method,
                    "recognition": arm,
                    "state": case.true_state.value,
                    "mu": report.mu,
                }
            )
    table: dict = {
        "recognition_accuracy": hits / len(cases),
        "n_cases": len(cases),
        "methods": {},
    }
    for method in ("adams", "mlp"):
        table["methods"][method] = {}
        for arm in ("with", "without"):
            sel = [r for r in rows if r["method"] == method and r["recognition"] == arm]
            per_state = {}
            for state in FlightState:
                mus = [r["mu"] for r in sel if r["state"] == state.value]
                if mus:
                    per_state[state.value] = {
                        "mu": float(np.mean(mus)),
                        "n": len(mus),
                    }
            table["methods"][method][arm] = {
                "overall_mu": float(np.mean([r["mu"] for r in sel])),
                "per_state": per_state,
            }
    return table
