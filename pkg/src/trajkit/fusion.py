"""Kinematic fusion of cleaned sensor channels and windowed features.

From a cleaned stream this module derives per-tick flight frames (position
with barometric altitude, differenced velocity and acceleration, integrated
attitude, three-point curvature, speed and acceleration magnitudes) and then
reduces frame windows to fixed-order statistical feature vectors: 15 channels
times 5 statistics = 75 values per window. The column order is part of the
feature-file contract and must never change between runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import DegeneratePoints, InsufficientData, NonphysicalPressure
from .telemetry import CleanStream

# Barometric altitude model constants (ISA-style hypsometric form).
ALTITUDE_SCALE = 4.43e4
PRESSURE_SCALE = 9.87e-6
PRESSURE_EXPONENT = 1.0 / 5.256


class FlightState(str, Enum):
    """The five discrete maneuver classes, with their single-letter codes."""

    CLIMB = "A"
    LEVEL = "B"
    TURN = "C"
    CIRCLE = "D"
    DESCENT = "E"

    @classmethod
    def from_code(cls, code: str) -> "FlightState":
        return cls(code)


@dataclass(frozen=True)
class FlightFrame:
    """Fused kinematics for one tick."""

    t: float
    pos: tuple[float, float, float]
    vel: tuple[float, float, float]
    attitude: tuple[float, float, float]
    acc: tuple[float, float, float]
    curvature: float
    speed_mag: float
    acc_mag: float


@dataclass(frozen=True)
class FeatureVector:
    """75 windowed statistics plus bookkeeping for one sliding window."""

    values: np.ndarray
    window_start: int
    label: FlightState | None = None


# Feature layout: channel-major, five statistics per channel.
FEATURE_CHANNELS = (
    "x", "y", "z",
    "vx", "vy", "vz",
    "theta_x", "theta_y", "theta_z",
    "ax", "ay", "az",
    "curvature", "speed_mag", "acc_mag",
)
FEATURE_STATS = ("mean", "var", "max", "min", "range")
FEATURE_NAMES = tuple(
    f"{channel}_{stat}" for channel in FEATURE_CHANNELS for stat in FEATURE_STATS
)
N_FEATURES = len(FEATURE_NAMES)  # 75


def altitude_from_pressure(pressure):
    """Convert static pressure in Pa to altitude in metres.

    Accepts scalars or arrays. Zero altitude corresponds to a pressure of
    ``1 / PRESSURE_SCALE`` (about 101317 Pa).
    """
    p = np.asarray(pressure, dtype=float)
    if np.any(p <= 0):
        raise NonphysicalPressure("pressure must be positive")
    z = ALTITUDE_SCALE * (1.0 - (PRESSURE_SCALE * p) ** PRESSURE_EXPONENT)
    return float(z) if np.isscalar(pressure) else z


def velocity(pos_series: np.ndarray, period_T: float) -> np.ndarray:
    """Backward-difference rate of change; the first tick copies the second."""
    pos = np.asarray(pos_series, dtype=float)
    if pos.shape[0] < 2:
        raise InsufficientData("velocity needs at least 2 samples")
    if not period_T > 0:
        raise ValueError("period_T must be positive")
    vel = np.empty_like(pos)
    vel[1:] = (pos[1:] - pos[:-1]) / period_T
    vel[0] = vel[1]
    return vel


def attitude(
    omega_series: np.ndarray,
    theta0: Sequence[float],
    period_T: float,
) -> np.ndarray:
    """Integrate body rates: theta[n] = theta0 + sum_{i=1..n} omega[i]*T."""
    omega = np.asarray(omega_series, dtype=float)
    if not period_T > 0:
        raise ValueError("period_T must be positive")
    theta0 = np.asarray(theta0, dtype=float)
    out = np.empty_like(omega, dtype=float)
    out[0] = theta0
    if omega.shape[0] > 1:
        out[1:] = theta0 + period_T * np.cumsum(omega[1:], axis=0)
    return out


def acceleration(vel_series: np.ndarray, period_T: float) -> np.ndarray:
    """Backward-difference of velocity; first tick copies the second."""
    return velocity(vel_series, period_T)


def curvature3(p1, p2, p3) -> float:
    """Curvature of the circle through three 3-D points (1/circumradius).

    Computed as 4*Area / (a*b*c) with the triangle area from the cross
    product, which is rotation and translation invariant and returns 0 for
    collinear points.
    """
    a1, a2, a3 = (np.asarray(p, dtype=float) for p in (p1, p2, p3))
    sides = (
        np.linalg.norm(a2 - a3),
        np.linalg.norm(a1 - a3),
        np.linalg.norm(a1 - a2),
    )
    if min(sides) == 0.0:
        raise DegeneratePoints("curvature needs three pairwise distinct points")
    area = 0.5 * np.linalg.norm(np.cross(a2 - a1, a3 - a1))
    return float(4.0 * area / (sides[0] * sides[1] * sides[2]))


def fuse(
    clean: CleanStream, theta0: Sequence[float] = (0.0, 0.0, 0.0)
) -> list[FlightFrame]:
    """Derive the full per-tick frame sequence from a cleaned stream.

    Curvature at tick k uses points k-1, k, k+1; the endpoints copy their
    interior neighbours. Needs at least 3 ticks.
    """
    n = len(clean)
    if n < 3:
        raise InsufficientData("fusion requires at least 3 ticks")
    T = clean.period_T
    z = altitude_from_pressure(clean.channels["pressure"])
    pos = np.column_stack([clean.channels["x"], clean.channels["y"], z])
    vel_ = velocity(pos, T)
    omega = np.column_stack(
        [clean.channels["wx"], clean.channels["wy"], clean.channels["wz"]]
    )
    att = attitude(omega, theta0, T)
    acc_ = acceleration(vel_, T)
    curv = np.empty(n)
    for k in range(1, n - 1):
        curv[k] = curvature3(pos[k - 1], pos[k], pos[k + 1])
    curv[0] = curv[1]
    curv[-1] = curv[-2]
    speed = np.linalg.norm(vel_, axis=1)
    acc_mag = np.linalg.norm(acc_, axis=1)
    return [
        FlightFrame(
            t=float(clean.t[k]),
            pos=tuple(pos[k]),
            vel=tuple(vel_[k]),
            attitude=tuple(att[k]),
            acc=tuple(acc_[k]),
            curvature=float(curv[k]),
            speed_mag=float(speed[k]),
            acc_mag=float(acc_mag[k]),
        )
        for k in range(n)
    ]


def frames_to_channels(frames: Sequence[FlightFrame]) -> np.ndarray:
    """Stack frames into an (n_frames, 15) matrix in FEATURE_CHANNELS order."""
    return np.array(
        [
            [
                f.pos[0], f.pos[1], f.pos[2],
                f.vel[0], f.vel[1], f.vel[2],
                f.attitude[0], f.attitude[1], f.attitude[2],
                f.acc[0], f.acc[1], f.acc[2],
                f.curvature, f.speed_mag, f.acc_mag,
            ]
            for f in frames
        ],
        dtype=float,
    )


def window_statistics(window: np.ndarray) -> np.ndarray:
    """Five statistics per channel: mean, population variance, max, min, range."""
    mean = window.mean(axis=0)
    var = window.var(axis=0)
    hi = window.max(axis=0)
    lo = window.min(axis=0)
    return np.column_stack([mean, var, hi, lo, hi - lo]).reshape(-1)


def window_features(
    frames: Sequence[FlightFrame],
    window_len: int = 20,
    stride: int = 10,
    label: FlightState | None = None,
) -> list[FeatureVector]:
    """Slide a window over the frames and emit one 75-value vector each.

    Window starts are 0, stride, 2*stride, ... while a full window fits.
    """
    if window_len < 2:
        raise InsufficientData("window_len must be at least 2")
    if stride < 1:
        raise ValueError("stride must be at least 1")
    channels = frames_to_channels(frames)
    if channels.shape[0] < window_len:
        raise InsufficientData(
            f"{channels.shape[0]} frames cannot fill a window of {window_len}"
        )
    out = []
    for start in range(0, channels.shape[0] - window_len + 1, stride):
        stats = window_statistics(channels[start : start + window_len])
        out.append(FeatureVector(values=stats, window_start=start, label=label))
    return out


def feature_matrix(vectors: Sequence[FeatureVector]) -> np.ndarray:
    """Stack feature vectors into an (n_windows, 75) array."""
    if not vectors:
        raise InsufficientData("no feature vectors")
    return np.vstack([fv.values for fv in vectors])
