import numpy as np
import pytest

from trajkit import io
from trajkit.adams import TrajectoryPrediction, confidence_curve
from trajkit.errors import InvalidData
from trajkit.fusion import FlightState, fuse, window_features
from trajkit.simgen import FlightScenario, generate
from trajkit.telemetry import preprocess


@pytest.fixture(scope="module")
def flight():
    return generate(FlightScenario(state=FlightState.TURN, seed=21))


class TestStreamCsv:
    def test_round_trip_is_lossless(self, tmp_path, flight):
        stream, _ = flight
        path = tmp_path / "raw.csv"
        io.write_stream_csv(path, stream)
        loaded = io.read_stream_csv(path)
        np.testing.assert_array_equal(loaded.t, stream.t)
        for name in stream.channels:
            np.testing.assert_array_equal(loaded.channels[name], stream.channels[name])

    def test_write_is_byte_deterministic(self, tmp_path, flight):
        stream, _ = flight
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        io.write_stream_csv(a, stream)
        io.write_stream_csv(b, stream)
        assert a.read_bytes() == b.read_bytes()

    def test_header_is_the_contract(self, tmp_path, flight):
        stream, _ = flight
        path = tmp_path / "raw.csv"
        io.write_stream_csv(path, stream)
        header = path.read_text().splitlines()[0]
        assert header == "t,x,y,pressure,wx,wy,wz,ax,ay,az"

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(InvalidData):
            io.read_stream_csv(path)


class TestFramesAndFeatures:
    def test_frames_round_trip(self, tmp_path, flight):
        stream, truth = flight
        path = tmp_path / "frames.csv"
        io.write_frames_csv(path, truth)
        loaded = io.read_frames_csv(path)
        assert loaded == truth

    def test_features_round_trip(self, tmp_path, flight):
        stream, _ = flight
        clean = preprocess(stream)
        frames = fuse(clean)
        vectors = window_features(frames, 20, 10, label=FlightState.TURN)
        path = tmp_path / "feats.csv"
        io.write_features_csv(path, vectors)
        loaded = io.read_features_csv(path)
        assert len(loaded) == len(vectors)
        for a, b in zip(loaded, vectors):
            np.testing.assert_array_equal(a.values, b.values)
            assert a.window_start == b.window_start
            assert a.label is b.label

    def test_feature_csv_is_stable_across_runs(self, tmp_path, flight):
        stream, _ = flight
        clean = preprocess(stream)
        vectors = window_features(fuse(clean), 20, 10)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        io.write_features_csv(a, vectors)
        io.write_features_csv(b, window_features(fuse(clean), 20, 10))
        assert a.read_bytes() == b.read_bytes()

    def test_states_round_trip(self, tmp_path):
        rows = [(0, "A"), (10, "C"), (20, "E")]
        path = tmp_path / "states.csv"
        io.write_states_csv(path, rows)
        assert io.read_states_csv(path) == rows


class TestPredictionCsv:
    def make_prediction(self):
        times = 0.1 * np.arange(4)
        points = np.column_stack([np.arange(4.0), np.zeros(4), np.ones(4)])
        curves = [None] + [
            confidence_curve(points[i - 1], points[i], 0.5, 8) for i in range(1, 4)
        ]
        return TrajectoryPrediction(
            times=times,
            points=points,
            method="adams",
            radii=np.full(4, 0.5),
            curves=curves,
        )

    def test_track_round_trip(self, tmp_path):
        prediction = self.make_prediction()
        path = tmp_path / "pred.csv"
        io.write_prediction_csv(path, prediction)
        track = io.read_track_csv(path)
        np.testing.assert_allclose(track[:, 0], prediction.times)
        np.testing.assert_allclose(track[:, 1:], prediction.points)

    def test_curve_sidecar_rows(self, tmp_path):
        prediction = self.make_prediction()
        path = tmp_path / "curves.csv"
        io.write_curves_csv(path, prediction)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,point_index,cx,cy,cz"
        assert len(lines) == 1 + 3 * 8  # three curves, eight samples each

    def test_track_reader_accepts_frames_csv(self, tmp_path, flight):
        _, truth = flight
        path = tmp_path / "frames.csv"
        io.write_frames_csv(path, truth)
        track = io.read_track_csv(path)
        assert track.shape == (len(truth), 4)


class TestJson:
    def test_sorted_and_deterministic(self, tmp_path):
        payload = {"b": 2, "a": [1.5, 2.5], "c": {"z": 1, "y": 0.1}}
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        io.save_json(a, payload)
        io.save_json(b, dict(reversed(list(payload.items()))))
        assert a.read_bytes() == b.read_bytes()
        assert io.load_json(a) == payload
