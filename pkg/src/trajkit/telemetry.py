"""Raw telemetry ingestion and the three-stage cleaning pass.

A raw stream carries planar GPS position, barometric pressure and body rates
plus accelerations on a fixed tick. Cleaning runs per channel:

1. outlier rejection against a three-sigma band over the whole channel,
2. gap repair with a degree-3 divided-difference interpolant built from the
   four nearest surviving samples,
3. first-order adaptive smoothing ``y[n] = m*x[n] + (1-m)*y[n-1]``.

Every repair is recorded so downstream stages can audit what was touched.
All functions here are pure; distinct streams may be processed concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegenerateNodes,
    ExtrapolationRefused,
    InsufficientData,
    InvalidCoefficient,
    InvalidData,
)

# Channel order is a wire-format contract (CSV columns after ``t``).
CHANNELS = ("x", "y", "pressure", "wx", "wy", "wz", "ax", "ay", "az")

# Tolerance on tick-to-tick period jitter before a stream is rejected.
PERIOD_TOLERANCE = 1e-9


@dataclass(frozen=True)
class RawSample:
    """One telemetry record: SI units, body rates in rad/s."""

    t: float
    x: float
    y: float
    pressure: float
    omega_x: float
    omega_y: float
    omega_z: float
    accel_x: float
    accel_y: float
    accel_z: float


@dataclass(frozen=True)
class RepairEntry:
    """One audit-log line: what happened to ``channel`` at ``index``."""

    index: int
    channel: str
    action: str  # rejected | interpolated | filtered


class RawStream:
    """Columnar view of a time-ordered telemetry stream.

    Parameters
    ----------
    t : array of sample times, strictly increasing, constant period.
    channels : mapping of channel name (see ``CHANNELS``) to 1-D array.
    """

    def __init__(self, t: np.ndarray, channels: dict[str, np.ndarray]):
        t = np.asarray(t, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise InsufficientData("stream must contain at least one sample")
        missing = [c for c in CHANNELS if c not in channels]
        if missing:
            raise InvalidData(f"missing channels: {missing}")
        self.t = t
        self.channels = {c: np.asarray(channels[c], dtype=float) for c in CHANNELS}
        for name, values in self.channels.items():
            if values.shape != t.shape:
                raise InvalidData(f"channel {name} length {values.size} != {t.size}")
        if t.size > 1:
            deltas = np.diff(t)
            if np.any(deltas <= 0):
                raise InvalidData("timestamps must be strictly increasing")
            if np.max(deltas) - np.min(deltas) > PERIOD_TOLERANCE:
                raise InvalidData("sample period is not constant")
            self.period_T = float(deltas[0])
        else:
            self.period_T = 0.0
        if np.any(self.channels["pressure"] <= 0):
            raise InvalidData("pressure must be positive")

    def __len__(self) -> int:
        return self.t.size

    def sample(self, i: int) -> RawSample:
        c = self.channels
        return RawSample(
            t=float(self.t[i]),
            x=float(c["x"][i]),
            y=float(c["y"][i]),
            pressure=float(c["pressure"][i]),
            omega_x=float(c["wx"][i]),
            omega_y=float(c["wy"][i]),
            omega_z=float(c["wz"][i]),
            accel_x=float(c["ax"][i]),
            accel_y=float(c["ay"][i]),
            accel_z=float(c["az"][i]),
        )


@dataclass
class CleanStream:
    """A repaired stream plus the audit log of every change made to it."""

    t: np.ndarray
    channels: dict[str, np.ndarray]
    period_T: float
    repair_log: list[RepairEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return self.t.size


def reject_outliers(
    series: Sequence[float], sigma_k: float = 3.0
) -> tuple[list[float | None], list[int]]:
    """Flag samples outside ``mean +- sigma_k * std`` of the whole series.

    Returns the series with flagged entries replaced by ``None`` and the
    sorted list of flagged indices. Statistics use every input sample
    (population std), so a constant series never flags anything.
    """
    values = np.asarray(series, dtype=float)
    if values.ndim != 1 or values.size < 4:
        raise InsufficientData("need at least 4 samples for outlier statistics")
    if not sigma_k > 0:
        raise InvalidCoefficient("sigma_k must be positive")
    if not np.all(np.isfinite(values)):
        raise InvalidData("series contains non-finite values")
    mean = float(np.mean(values))
    std = float(np.std(values))
    # a numerically constant series (spread at rounding-dust level) flags
    # nothing, matching the exactly-constant case
    if np.ptp(values) <= 1e-9 * max(1.0, abs(mean)):
        std = np.inf
    flagged = np.flatnonzero(np.abs(values - mean) > sigma_k * std)
    kept: list[float | None] = [float(v) for v in values]
    for i in flagged:
        kept[int(i)] = None
    return kept, [int(i) for i in flagged]


def _divided_differences(ts: np.ndarray, vs: np.ndarray) -> np.ndarray:
    coef = vs.astype(float).copy()
    n = coef.size
    for j in range(1, n):
        coef[j:n] = (coef[j:n] - coef[j - 1 : n - 1]) / (ts[j:n] - ts[: n - j])
    return coef


def newton_interpolate(
    neighbors: Sequence[tuple[float, float]],
    t_query: float,
    allow_extrapolation: bool = False,
) -> float:
    """Evaluate the degree-3 divided-difference polynomial at ``t_query``.

    ``neighbors`` must be exactly four (t, value) points with pairwise
    distinct abscissae. Queries outside their hull raise unless
    ``allow_extrapolation`` is set.
    """
    if len(neighbors) != 4:
        raise InsufficientData("exactly 4 interpolation nodes required")
    pts = sorted((float(t), float(v)) for t, v in neighbors)
    ts = np.array([p[0] for p in pts])
    vs = np.array([p[1] for p in pts])
    if np.min(np.diff(ts)) <= 0:
        raise DegenerateNodes("interpolation nodes share an abscissa")
    if not allow_extrapolation and not (ts[0] <= t_query <= ts[-1]):
        raise ExtrapolationRefused(
            f"query {t_query} outside node hull [{ts[0]}, {ts[-1]}]"
        )
    coef = _divided_differences(ts, vs)
    # Horner evaluation of the Newton form.
    acc = coef[-1]
    for j in range(2, -1, -1):
        acc = coef[j] + (t_query - ts[j]) * acc
    return float(acc)


def adaptive_smooth(
    series: Sequence[float],
    m: float | Callable[[int, float, float], float],
) -> np.ndarray:
    """First-order recursive smoother seeded with the first sample.

    ``m`` is either a fixed coefficient in [0, 1] or a policy callable
    ``(index, x_n, y_prev) -> m_n`` evaluated per sample, which is the hook
    for threshold-adaptive schemes.
    """
    values = np.asarray(series, dtype=float)
    if values.size == 0:
        raise InsufficientData("cannot smooth an empty series")
    fixed = not callable(m)
    if fixed and not 0.0 <= float(m) <= 1.0:
        raise InvalidCoefficient(f"smoothing coefficient {m} outside [0, 1]")
    out = np.empty_like(values)
    out[0] = values[0]
    for n in range(1, values.size):
        m_n = float(m) if fixed else float(m(n, values[n], out[n - 1]))
        if not 0.0 <= m_n <= 1.0:
            raise InvalidCoefficient(f"smoothing coefficient {m_n} outside [0, 1]")
        out[n] = m_n * values[n] + (1.0 - m_n) * out[n - 1]
    return out


def _repair_gaps(
    t: np.ndarray, values: np.ndarray, flagged: list[int], channel: str
) -> np.ndarray:
    """Fill flagged indices with the Newton value from 4 nearest survivors."""
    surviving = [i for i in range(values.size) if i not in set(flagged)]
    if len(surviving) < 4:
        raise InsufficientData(
            f"channel {channel}: fewer than 4 surviving samples to repair from"
        )
    repaired = values.copy()
    surv_t = t[surviving]
    for idx in flagged:
        # Nearest by time distance, ties broken toward earlier samples.
        order = sorted(
            range(len(surviving)), key=lambda j: (abs(surv_t[j] - t[idx]), surv_t[j])
        )[:4]
        nodes = [(float(surv_t[j]), float(repaired[surviving[j]])) for j in order]
        repaired[idx] = newton_interpolate(nodes, float(t[idx]), allow_extrapolation=True)
    return repaired


def preprocess(
    stream: RawStream,
    sigma_k: float = 3.0,
    smooth_m: float | Callable[[int, float, float], float] = 0.5,
) -> CleanStream:
    """Run reject -> repair -> smooth on every channel of a raw stream.

    The returned stream keeps the input's timestamps and length. The repair
    log carries one ``rejected`` and one ``interpolated`` entry per flagged
    sample and, when the smoother actually alters a channel (coefficient
    below 1), a single ``filtered`` entry at index 0 for that channel.
    """
    if len(stream) < 4:
        raise InsufficientData("preprocessing requires at least 4 samples")
    log: list[RepairEntry] = []
    cleaned: dict[str, np.ndarray] = {}
    for name in CHANNELS:
        values = stream.channels[name]
        try:
            _, flagged = reject_outliers(values, sigma_k=sigma_k)
            repaired = _repair_gaps(stream.t, values, flagged, name)
            smoothed = adaptive_smooth(repaired, smooth_m)
        except (InvalidCoefficient, InvalidData) as exc:
            raise type(exc)(f"channel {name}: {exc}") from exc
        for idx in sorted(flagged):
            log.append(RepairEntry(idx, name, "rejected"))
            log.append(RepairEntry(idx, name, "interpolated"))
        if not np.array_equal(smoothed, repaired):
            log.append(RepairEntry(0, name, "filtered"))
        cleaned[name] = smoothed
    return CleanStream(
        t=stream.t.copy(), channels=cleaned, period_T=stream.period_T, repair_log=log
    )
