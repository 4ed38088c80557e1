"""Deterministic synthetic flight generator for the five maneuver classes.

Each scenario produces an analytic trajectory (piecewise straight and
constant-rate-turn segments at constant speed, with a constant climb or
descent rate where applicable), the matching noisy sensor stream, and a
ground-truth frame sequence that uses the same discrete conventions as the
fusion stage, so a noise-free stream round-trips exactly.

Turn and circle deliberately share their curvature range: a turn is a single
heading change of at most 120 degrees between straight legs, a circle is a
sustained arc of at least a full revolution, so short windows of either look
alike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidScenario
from .fusion import (
    ALTITUDE_SCALE,
    PRESSURE_EXPONENT,
    PRESSURE_SCALE,
    FlightFrame,
    FlightState,
    acceleration,
    curvature3,
    velocity,
)
from .telemetry import RawStream


def pressure_from_altitude(z):
    """Inverse of the barometric altitude model."""
    z = np.asarray(z, dtype=float)
    if np.any(z >= ALTITUDE_SCALE):
        raise InvalidScenario("altitude beyond the barometric model ceiling")
    return (1.0 - z / ALTITUDE_SCALE) ** (1.0 / PRESSURE_EXPONENT) / PRESSURE_SCALE


@dataclass(frozen=True)
class SensorNoise:
    """Per-sensor standard deviations (SI units)."""

    gps: float = 0.5
    pressure: float = 5.0
    gyro: float = 0.01
    accel: float = 0.05


@dataclass(frozen=True)
class FlightScenario:
    """Kinematic recipe for one synthetic flight."""

    state: FlightState
    duration: float = 12.0
    period_T: float = 0.1
    cruise_speed: float = 12.0
    climb_rate: float = 4.0
    descent_rate: float = 4.0
    turn_rate: float = 0.55
    turn_start: float = 1.5
    turn_span: float = 1.6  # radians of heading change
    circle_radius: float = 19.5
    heading0: float = 0.0
    start: tuple[float, float, float] = (0.0, 0.0, 300.0)
    noise: SensorNoise = SensorNoise()
    seed: int = 0


@dataclass(frozen=True)
class LabeledFlight:
    """One corpus member: scenario, noisy stream, ground-truth frames."""

    state: FlightState
    scenario: FlightScenario
    stream: RawStream
    truth: list[FlightFrame]


def _validate(sc: FlightScenario) -> None:
    if not sc.duration > 0:
        raise InvalidScenario("duration must be positive")
    if not sc.period_T > 0:
        raise InvalidScenario("period must be positive")
    if not sc.cruise_speed > 0:
        raise InvalidScenario("cruise speed must be positive")
    noise = sc.noise
    if min(noise.gps, noise.pressure, noise.gyro, noise.accel) < 0:
        raise InvalidScenario("noise levels cannot be negative")
    if sc.state is FlightState.CIRCLE:
        if not sc.circle_radius > 0:
            raise InvalidScenario("circle radius must be positive")
        arc = sc.duration * sc.cruise_speed / sc.circle_radius
        if arc < 2.0 * math.pi - 1e-9:
            raise InvalidScenario("circle must sustain at least a full revolution")
    if sc.state is FlightState.TURN:
        if not 0 < sc.turn_span <= 2.0 * math.pi / 3.0 + 1e-9:
            raise InvalidScenario("turn span must be in (0, 120 degrees]")
        if not sc.turn_rate > 0:
            raise InvalidScenario("turn rate must be positive")
        arc_time = sc.turn_span / sc.turn_rate
        if sc.turn_start < 0 or sc.turn_start + arc_time > sc.duration:
            raise InvalidScenario("turn segment does not fit in the flight")


def _segments(sc: FlightScenario) -> tuple[list[tuple[float, float]], float]:
    """Piecewise (duration, heading_rate) plan plus the vertical rate."""
    if sc.state is FlightState.CLIMB:
        return [(sc.duration, 0.0)], abs(sc.climb_rate)
    if sc.state is FlightState.LEVEL:
        return [(sc.duration, 0.0)], 0.0
    if sc.state is FlightState.DESCENT:
        return [(sc.duration, 0.0)], -abs(sc.descent_rate)
    if sc.state is FlightState.CIRCLE:
        return [(sc.duration, sc.cruise_speed / sc.circle_radius)], 0.0
    arc_time = sc.turn_span / sc.turn_rate
    tail = sc.duration - sc.turn_start - arc_time
    return [(sc.turn_start, 0.0), (arc_time, sc.turn_rate), (tail, 0.0)], 0.0


def _pose_at(
    t: float, speed: float, heading0: float, segments: list[tuple[float, float]]
) -> tuple[float, float, float]:
    """Exact horizontal displacement and heading at time t along the plan."""
    x = y = 0.0
    psi = heading0
    remaining = t
    for seg_duration, omega in segments:
        take = min(seg_duration, remaining)
        if take > 0:
            if omega == 0.0:
                x += speed * math.cos(psi) * take
                y += speed * math.sin(psi) * take
            else:
                x += speed / omega * (math.sin(psi + omega * take) - math.sin(psi))
                y -= speed / omega * (math.cos(psi + omega * take) - math.cos(psi))
            psi += omega * take
            remaining -= take
        if remaining <= 0:
            break
    return x, y, psi


def _truth_frames(
    t: np.ndarray, pos: np.ndarray, psi: np.ndarray, period_T: float
) -> list[FlightFrame]:
    """Ground truth using the same discrete conventions as the fusion stage."""
    vel = velocity(pos, period_T)
    acc = acceleration(vel, period_T)
    n = t.size
    curv = np.empty(n)
    for k in range(1, n - 1):
        curv[k] = curvature3(pos[k - 1], pos[k], pos[k + 1])
    curv[0] = curv[1]
    curv[-1] = curv[-2]
    speed = np.linalg.norm(vel, axis=1)
    acc_mag = np.linalg.norm(acc, axis=1)
    return [
        FlightFrame(
            t=float(t[k]),
            pos=tuple(pos[k]),
            vel=tuple(vel[k]),
            attitude=(0.0, 0.0, float(psi[k])),
            acc=tuple(acc[k]),
            curvature=float(curv[k]),
            speed_mag=float(speed[k]),
            acc_mag=float(acc_mag[k]),
        )
        for k in range(n)
    ]


def generate(scenario: FlightScenario) -> tuple[RawStream, list[FlightFrame]]:
    """Produce the noisy raw stream and the exact truth frames for a scenario."""
    _validate(scenario)
    T = scenario.period_T
    n = int(round(scenario.duration / T)) + 1
    if n < 4:
        raise InvalidScenario("flight too short for a usable stream")
    t = T * np.arange(n)
    segments, v_rate = _segments(scenario)
    poses = [
        _pose_at(float(tk), scenario.cruise_speed, scenario.heading0, segments)
        for tk in t
    ]
    x0, y0, z0 = scenario.start
    pos = np.array(
        [[x0 + px, y0 + py, z0 + v_rate * tk] for (px, py, _), tk in zip(poses, t)]
    )
    psi = np.array([p[2] for p in poses])
    truth = _truth_frames(t, pos, psi, T)

    rng = np.random.default_rng(scenario.seed)
    noise = scenario.noise
    gps_x = pos[:, 0] + rng.normal(0.0, noise.gps, n)
    gps_y = pos[:, 1] + rng.normal(0.0, noise.gps, n)
    pressure = pressure_from_altitude(pos[:, 2]) + rng.normal(0.0, noise.pressure, n)
    wz = np.empty(n)
    wz[1:] = np.diff(psi) / T
    wz[0] = wz[1]
    accel = np.zeros((n, 3))
    if n > 2:
        accel[2:] = np.diff(pos, n=2, axis=0) / T**2
        accel[0] = accel[1] = accel[2]
    channels = {
        "x": gps_x,
        "y": gps_y,
        "pressure": pressure,
        "wx": rng.normal(0.0, noise.gyro, n),
        "wy": rng.normal(0.0, noise.gyro, n),
        "wz": wz + rng.normal(0.0, noise.gyro, n),
        "ax": accel[:, 0] + rng.normal(0.0, noise.accel, n),
        "ay": accel[:, 1] + rng.normal(0.0, noise.accel, n),
        "az": accel[:, 2] + rng.normal(0.0, noise.accel, n),
    }
    return RawStream(t, channels), truth


def windows_per_flight(
    duration: float,
    period_T: float,
    window_len: int,
    stride: int,
    discard_ticks: int = 0,
) -> int:
    """Feature windows one flight yields, after discarding leading ticks."""
    n_ticks = int(round(duration / period_T)) + 1 - discard_ticks
    if n_ticks < window_len:
        return 0
    return (n_ticks - window_len) // stride + 1


def _jittered(base: FlightScenario, rng: np.random.Generator, seed: int) -> FlightScenario:
    """Randomize scenario parameters so classes overlap realistically.

    Straight states keep a near-canonical heading; turning states draw theirs
    uniformly so a window's absolute heading cannot tell an arc of a turn
    from the same arc of a circle.
    """
    straight = base.state in (FlightState.CLIMB, FlightState.LEVEL, FlightState.DESCENT)
    heading_jitter = (
        rng.uniform(-0.3, 0.3) if straight else rng.uniform(0.0, 2.0 * math.pi)
    )
    return replace(
        base,
        cruise_speed=base.cruise_speed * rng.uniform(0.92, 1.08),
        climb_rate=base.climb_rate * rng.uniform(0.9, 1.1),
        descent_rate=base.descent_rate * rng.uniform(0.9, 1.1),
        turn_rate=base.turn_rate * rng.uniform(0.95, 1.05),
        turn_start=rng.uniform(1.2, 1.8),
        turn_span=rng.uniform(1.8, 2.09),
        circle_radius=base.circle_radius * rng.uniform(0.9, 1.06),
        heading0=base.heading0 + heading_jitter,
        start=(
            base.start[0] + rng.uniform(-5.0, 5.0),
            base.start[1] + rng.uniform(-5.0, 5.0),
            # wide altitude spread keeps (z, t) from revealing the state
            base.start[2] + rng.uniform(-50.0, 50.0),
        ),
        seed=seed,
    )


def generate_corpus(
    per_state: int,
    seed: int = 0,
    window_len: int = 20,
    stride: int = 10,
    base: FlightScenario | None = None,
    discard_ticks: int = 0,
) -> list[LabeledFlight]:
    """Balanced labeled flights giving at least ``per_state`` windows per class.

    Flight counts are rounded up to whole flights, identical across states,
    with ``discard_ticks`` leading ticks excluded from the window budget so
    a downstream warm-up cut does not eat into the requested count. Every
    flight derives all of its randomness from (seed, state, index), so the
    corpus is bitwise reproducible.
    """
    if per_state < 1:
        raise InvalidScenario("per-state window count must be at least 1")
    if base is None:
        base = FlightScenario(state=FlightState.LEVEL)
    per_flight = windows_per_flight(
        base.duration, base.period_T, window_len, stride, discard_ticks
    )
    if per_flight < 1:
        raise InvalidScenario("flights too short for even one feature window")
    n_flights = -(-per_state // per_flight)  # ceil
    corpus: list[LabeledFlight] = []
    for state_idx, state in enumerate(FlightState):
        for j in range(n_flights):
            jitter_rng = np.random.default_rng(
                np.random.SeedSequence([seed, state_idx, j, 0])
            )
            child_seed = int(
                np.random.SeedSequence([seed, state_idx, j, 1]).generate_state(1)[0]
            )
            scenario = _jittered(replace(base, state=state), jitter_rng, child_seed)
            stream, truth = generate(scenario)
            corpus.append(
                LabeledFlight(state=state, scenario=scenario, stream=stream, truth=truth)
            )
    return corpus
