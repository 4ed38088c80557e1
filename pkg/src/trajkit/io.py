"""File formats: telemetry/frame/feature CSVs and model JSON documents.

Floats are written with shortest round-trip repr and files always use LF
newlines, so identical inputs produce byte-identical outputs.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidData
from .fusion import FEATURE_NAMES, FeatureVector, FlightFrame, FlightState
from .telemetry import CHANNELS, CleanStream, RawStream

RAW_HEADER = ("t",) + CHANNELS
FRAME_HEADER = (
    "t", "x", "y", "z", "vx", "vy", "vz",
    "theta_x", "theta_y", "theta_z", "ax", "ay", "az",
    "curvature", "speed_mag", "acc_mag",
)
FEATURE_HEADER = FEATURE_NAMES + ("window_start", "label")
PREDICTION_HEADER = ("t", "x", "y", "z", "r")
CURVE_HEADER = ("t", "point_index", "cx", "cy", "cz")


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_rows(path: Path, header: Sequence[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _read_rows(path: Path, expected_header: Sequence[str]) -> list[list[str]]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise InvalidData(f"{path}: empty file")
    header = lines[0].split(",")
    if list(header) != list(expected_header):
        raise InvalidData(
            f"{path}: header {header} does not match expected {list(expected_header)}"
        )
    return [line.split(",") for line in lines[1:]]


def write_stream_csv(path: Path, stream: RawStream | CleanStream) -> None:
    rows = (
        [_fmt(stream.t[i])] + [_fmt(stream.channels[c][i]) for c in CHANNELS]
        for i in range(len(stream))
    )
    _write_rows(path, RAW_HEADER, rows)


def read_stream_csv(path: Path) -> RawStream:
    rows = _read_rows(path, RAW_HEADER)
    data = np.array([[float(v) for v in row] for row in rows])
    if data.size == 0:
        raise InvalidData(f"{path}: no samples")
    return RawStream(
        data[:, 0], {c: data[:, 1 + i] for i, c in enumerate(CHANNELS)}
    )


def write_repair_log_csv(path: Path, clean: CleanStream) -> None:
    rows = (
        [str(entry.index), entry.channel, entry.action] for entry in clean.repair_log
    )
    _write_rows(path, ("index", "channel", "action"), rows)


def write_frames_csv(path: Path, frames: Sequence[FlightFrame]) -> None:
    rows = (
        [
            _fmt(f.t), _fmt(f.pos[0]), _fmt(f.pos[1]), _fmt(f.pos[2]),
            _fmt(f.vel[0]), _fmt(f.vel[1]), _fmt(f.vel[2]),
            _fmt(f.attitude[0]), _fmt(f.attitude[1]), _fmt(f.attitude[2]),
            _fmt(f.acc[0]), _fmt(f.acc[1]), _fmt(f.acc[2]),
            _fmt(f.curvature), _fmt(f.speed_mag), _fmt(f.acc_mag),
        ]
        for f in frames
    )
    _write_rows(path, FRAME_HEADER, rows)


def read_frames_csv(path: Path) -> list[FlightFrame]:
    rows = _read_rows(path, FRAME_HEADER)
    frames = []
    for row in rows:
        v = [float(x) for x in row]
        frames.append(
            FlightFrame(
                t=v[0],
                pos=(v[1], v[2], v[3]),
                vel=(v[4], v[5], v[6]),
                attitude=(v[7], v[8], v[9]),
                acc=(v[10], v[11], v[12]),
                curvature=v[13],
                speed_mag=v[14],
                acc_mag=v[15],
            )
        )
    return frames


def write_features_csv(path: Path, vectors: Sequence[FeatureVector]) -> None:
    rows = (
        [_fmt(v) for v in fv.values]
        + [str(fv.window_start), fv.label.value if fv.label else ""]
        for fv in vectors
    )
    _write_rows(path, FEATURE_HEADER, rows)


def read_features_csv(path: Path) -> list[FeatureVector]:
    rows = _read_rows(path, FEATURE_HEADER)
    vectors = []
    for row in rows:
        values = np.array([float(v) for v in row[: len(FEATURE_NAMES)]])
        start = int(row[len(FEATURE_NAMES)])
        code = row[len(FEATURE_NAMES) + 1]
        label = FlightState(code) if code else None
        vectors.append(FeatureVector(values=values, window_start=start, label=label))
    return vectors


def write_states_csv(path: Path, rows: Sequence[tuple[int, str]]) -> None:
    _write_rows(
        path, ("window_start", "state"), ([str(i), s] for i, s in rows)
    )


def read_states_csv(path: Path) -> list[tuple[int, str]]:
    return [(int(r[0]), r[1]) for r in _read_rows(path, ("window_start", "state"))]


def write_prediction_csv(path: Path, prediction) -> None:
    radii = (
        prediction.radii
        if prediction.radii is not None
        else np.zeros(prediction.times.size)
    )
    rows = (
        [
            _fmt(prediction.times[i]),
            _fmt(prediction.points[i][0]),
            _fmt(prediction.points[i][1]),
            _fmt(prediction.points[i][2]),
            _fmt(radii[i]),
        ]
        for i in range(prediction.times.size)
    )
    _write_rows(path, PREDICTION_HEADER, rows)


def read_track_csv(path: Path) -> np.ndarray:
    """Read (t, x, y, z) rows from a prediction or frame CSV."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [line for line in text.splitlines() if line.strip()]
    if len(lines) < 2:
        raise InvalidData(f"{path}: no data rows")
    header = lines[0].split(",")
    try:
        idx = [header.index(c) for c in ("t", "x", "y", "z")]
    except ValueError as exc:
        raise InvalidData(f"{path}: missing t/x/y/z columns") from exc
    out = []
    for line in lines[1:]:
        row = line.split(",")
        out.append([float(row[i]) for i in idx])
    return np.asarray(out)


def write_curves_csv(path: Path, prediction) -> None:
    rows = []
    if prediction.curves:
        for i, curve in enumerate(prediction.curves):
            if curve is None:
                continue
            for j, point in enumerate(curve.sample_points):
                rows.append(
                    [
                        _fmt(prediction.times[i]),
                        str(j),
                        _fmt(point[0]),
                        _fmt(point[1]),
                        _fmt(point[2]),
                    ]
                )
    _write_rows(path, CURVE_HEADER, rows)


def save_json(path: Path, payload: dict) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2)
    Path(path).write_text(text + "\n", encoding="utf-8", newline="\n")


def load_json(path: Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
