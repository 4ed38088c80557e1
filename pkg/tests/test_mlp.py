import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from trajkit.errors import DimensionError, InsufficientData, InvalidData
from trajkit.fusion import FlightFrame, FlightState
from trajkit.mlp import (
    MlpRegressor,
    Normalization,
    forward,
    init_params,
    loss_and_grads,
    rollout,
    transition_dataset,
)
from trajkit.simgen import FlightScenario, SensorNoise, generate


class TestGradients:
    def test_backprop_matches_central_differences(self):
        rng = np.random.default_rng(0)
        params = init_params(rng, 7, 8, 4)
        X = rng.normal(0, 1, (12, 7))
        Y = rng.normal(0, 1, (12, 4))
        _, grads = loss_and_grads(params, X, Y)
        eps = 1e-5
        for key in params:
            flat = params[key].reshape(-1)
            numeric = np.empty_like(flat)
            for i in range(flat.size):
                keep = flat[i]
                flat[i] = keep + eps
                up = np.mean((forward(params, X) - Y) ** 2)
                flat[i] = keep - eps
                down = np.mean((forward(params, X) - Y) ** 2)
                flat[i] = keep
                numeric[i] = (up - down) / (2 * eps)
            analytic = grads[key].reshape(-1)
            denom = np.maximum(np.abs(analytic), np.maximum(np.abs(numeric), 1e-8))
            assert np.max(np.abs(analytic - numeric) / denom) < 1e-4

    def test_loss_is_mean_squared_error(self):
        rng = np.random.default_rng(1)
        params = init_params(rng, 3, 4, 2)
        X = rng.normal(0, 1, (5, 3))
        Y = rng.normal(0, 1, (5, 2))
        loss, _ = loss_and_grads(params, X, Y)
        assert loss == pytest.approx(float(np.mean((forward(params, X) - Y) ** 2)))

    def test_zero_targets_with_zero_output_layer_is_a_fixed_point(self):
        rng = np.random.default_rng(2)
        params = init_params(rng, 7, 8, 4)
        params["w2"][:] = 0.0
        params["b2"][:] = 0.0
        X = rng.normal(0, 1, (10, 7))
        Y = np.zeros((10, 4))
        loss, grads = loss_and_grads(params, X, Y)
        assert loss == 0.0
        np.testing.assert_array_equal(grads["w2"], 0.0)
        np.testing.assert_array_equal(grads["b2"], 0.0)
        np.testing.assert_array_equal(grads["w1"], 0.0)


class TestNormalization:
    def test_round_trip_is_identity(self):
        rng = np.random.default_rng(2)
        data = rng.normal(3, 7, (40, 5))
        norm = Normalization.fit(data)
        np.testing.assert_allclose(norm.invert(norm.apply(data)), data, atol=1e-12)

    def test_constant_feature_keeps_unit_scale(self):
        data = np.column_stack([np.full(10, 4.0), np.arange(10.0)])
        norm = Normalization.fit(data)
        assert norm.scale[0] == 1.0
        np.testing.assert_allclose(norm.invert(norm.apply(data)), data, atol=1e-12)


class TestMlpRegressor:
    def test_learns_linear_map_on_positive_orthant(self):
        rng = np.random.default_rng(3)
        W = rng.uniform(-1, 1, (4, 7))
        X = rng.uniform(0.5, 1.5, (80, 7))
        Y = X @ W.T
        model = MlpRegressor(hidden_units=8, learning_rate=0.05, epochs=5000, seed=0)
        model.fit(X, Y)
        assert model.final_loss_ < 1e-3

    def test_bitwise_deterministic_for_fixed_seed(self):
        rng = np.random.default_rng(4)
        X = rng.normal(0, 1, (30, 7))
        Y = rng.normal(0, 1, (30, 4))
        a = MlpRegressor(epochs=200, learning_rate=0.01, seed=9).fit(X, Y)
        b = MlpRegressor(epochs=200, learning_rate=0.01, seed=9).fit(X.copy(), Y.copy())
        for key in a.params_:
            np.testing.assert_array_equal(a.params_[key], b.params_[key])
        assert a.final_loss_ == b.final_loss_

    def test_zero_network_predicts_output_mean(self):
        rng = np.random.default_rng(5)
        X = rng.normal(0, 1, (20, 7))
        Y = rng.normal(5, 2, (20, 4))
        model = MlpRegressor(epochs=0, seed=1).fit(X, Y)
        model.params_["w1"][:] = 0.0
        model.params_["b1"][:] = 0.0
        model.params_["w2"][:] = 0.0
        model.params_["b2"][:] = 0.0
        # normalized forward pass is zero, denormalization restores the mean
        np.testing.assert_allclose(model.predict(X[0]), Y.mean(axis=0), atol=1e-12)

    def test_hand_computed_forward_pass(self):
        model = MlpRegressor(epochs=0, seed=2)
        X = np.zeros((2, 3))
        Y = np.zeros((2, 2))
        model.fit(X, Y)
        model.input_norm_ = Normalization.identity(3)
        model.output_norm_ = Normalization.identity(2)
        model.params_ = {
            "w1": np.array([[1.0, -1.0], [2.0, 0.0], [0.0, 1.0]]),
            "b1": np.array([0.5, -0.25]),
            "w2": np.array([[1.0, 0.0], [-1.0, 2.0]]),
            "b2": np.array([0.25, 0.5]),
        }
        model.n_features_in_ = 3
        x = np.array([1.0, 0.5, -2.0])
        hidden = np.maximum([1.0 + 1.0 + 0.5, -1.0 - 2.0 - 0.25], 0.0)
        expected = np.array(
            [hidden[0] * 1.0 + hidden[1] * -1.0 + 0.25, hidden[1] * 2.0 + 0.5]
        )
        np.testing.assert_allclose(model.predict(x), expected, atol=1e-12)

    def test_invalid_learning_rate(self):
        with pytest.raises(ValueError):
            MlpRegressor(learning_rate=-1.0).fit(np.ones((2, 2)), np.ones((2, 1)))

    def test_nan_input_rejected(self):
        rng = np.random.default_rng(6)
        model = MlpRegressor(epochs=10, seed=3).fit(
            rng.normal(0, 1, (10, 3)), rng.normal(0, 1, (10, 2))
        )
        bad = np.array([1.0, np.nan, 0.0])
        with pytest.raises(InvalidData):
            model.predict(bad)

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(7)
        model = MlpRegressor(epochs=5, seed=4).fit(
            rng.normal(0, 1, (10, 3)), rng.normal(0, 1, (10, 2))
        )
        with pytest.raises(DimensionError):
            model.predict(np.ones(5))

    def test_unfitted_raises(self):
        with pytest.raises(NotFittedError):
            MlpRegressor().predict(np.ones(7))

    def test_serialization_round_trip(self):
        rng = np.random.default_rng(8)
        X = rng.normal(0, 1, (25, 7))
        Y = rng.normal(0, 1, (25, 4))
        model = MlpRegressor(epochs=100, learning_rate=0.01, seed=5).fit(X, Y)
        clone = MlpRegressor.from_dict(model.to_dict())
        np.testing.assert_allclose(clone.predict(X), model.predict(X), atol=1e-12)


class TestTransitions:
    def make_frames(self):
        scenario = FlightScenario(
            state=FlightState.LEVEL, noise=SensorNoise(0, 0, 0, 0), seed=11
        )
        _, truth = generate(scenario)
        return truth

    def test_shapes_and_alignment(self):
        frames = self.make_frames()
        X, Y = transition_dataset(frames)
        assert X.shape == (len(frames) - 1, 7)
        assert Y.shape == (len(frames) - 1, 4)
        np.testing.assert_allclose(X[0], [frames[0].t, *frames[0].pos, *frames[0].vel])
        np.testing.assert_allclose(
            Y[0][:3], np.subtract(frames[1].pos, frames[0].pos), atol=1e-12
        )
        assert Y[0][3] == pytest.approx(frames[1].speed_mag)

    def test_needs_two_frames(self):
        frames = self.make_frames()
        with pytest.raises(InsufficientData):
            transition_dataset(frames[:1])


class TestRollout:
    def test_zero_step_model_is_stationary(self):
        rng = np.random.default_rng(9)
        model = MlpRegressor(epochs=0, seed=6).fit(
            rng.normal(0, 1, (10, 7)), rng.normal(0, 1, (10, 4))
        )
        for key in model.params_:
            model.params_[key][:] = 0.0
        model.output_norm_ = Normalization.identity(4)
        start = FlightFrame(
            t=0.0, pos=(1.0, 2.0, 3.0), vel=(0.0, 0.0, 0.0),
            attitude=(0, 0, 0), acc=(0, 0, 0),
            curvature=0.0, speed_mag=0.0, acc_mag=0.0,
        )
        track = rollout(model, start, 10, 0.1)
        np.testing.assert_allclose(track.points, np.tile([1.0, 2.0, 3.0], (11, 1)))

    def test_constant_velocity_flight_within_half_metre(self):
        scenario = FlightScenario(
            state=FlightState.LEVEL, noise=SensorNoise(0, 0, 0, 0), seed=12
        )
        _, truth = generate(scenario)
        X, Y = transition_dataset(truth)
        model = MlpRegressor(hidden_units=8, learning_rate=0.01, epochs=3000, seed=7)
        model.fit(X, Y)
        start = truth[50]
        track = rollout(model, start, 20, scenario.period_T)
        reference = np.array([f.pos for f in truth[51:71]])
        distances = np.linalg.norm(track.points[1:] - reference, axis=1)
        assert distances.max() < 0.5

    def test_timestamps_follow_period(self):
        rng = np.random.default_rng(10)
        model = MlpRegressor(epochs=0, seed=8).fit(
            rng.normal(0, 1, (10, 7)), rng.normal(0, 1, (10, 4))
        )
        start = FlightFrame(
            t=2.0, pos=(0, 0, 0), vel=(1, 0, 0), attitude=(0, 0, 0),
            acc=(0, 0, 0), curvature=0.0, speed_mag=1.0, acc_mag=0.0,
        )
        track = rollout(model, start, 5, 0.5)
        np.testing.assert_allclose(track.times, 2.0 + 0.5 * np.arange(6))

    def test_zero_steps_rejected(self):
        rng = np.random.default_rng(11)
        model = MlpRegressor(epochs=0, seed=9).fit(
            rng.normal(0, 1, (10, 7)), rng.normal(0, 1, (10, 4))
        )
        start = FlightFrame(
            t=0.0, pos=(0, 0, 0), vel=(1, 0, 0), attitude=(0, 0, 0),
            acc=(0, 0, 0), curvature=0.0, speed_mag=1.0, acc_mag=0.0,
        )
        with pytest.raises(ValueError):
            rollout(model, start, 0, 0.1)
