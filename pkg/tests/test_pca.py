import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from trajkit.errors import DimensionError, InsufficientData, InvalidData
from trajkit.pca import FeatureScaler, PrincipalComponents, jacobi_eigh


def random_spd(rng, n):
    a = rng.normal(size=(n, n))
    return a @ a.T


class TestJacobi:
    def test_matches_reference_eigensolver(self):
        rng = np.random.default_rng(0)
        for n in (2, 5, 10, 30):
            m = random_spd(rng, n)
            values, vectors = jacobi_eigh(m)
            reference = np.sort(np.linalg.eigvalsh(m))[::-1]
            np.testing.assert_allclose(values, reference, rtol=1e-10, atol=1e-10)
            for value, vector in zip(values, vectors):
                residual = np.linalg.norm(m @ vector - value * vector)
                assert residual < 1e-8 * max(1.0, abs(value))

    def test_eigenvectors_orthonormal(self):
        rng = np.random.default_rng(1)
        m = random_spd(rng, 12)
        _, vectors = jacobi_eigh(m)
        gram = vectors @ vectors.T
        np.testing.assert_allclose(gram, np.eye(12), atol=1e-9)

    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            jacobi_eigh(np.ones((2, 3)))


class TestPrincipalComponents:
    def test_rank_one_data(self):
        rng = np.random.default_rng(2)
        t = rng.normal(0, 3, 50)
        data = np.zeros((50, 4))
        data[:, 1] = t
        data += [1.0, 2.0, 3.0, 4.0]
        model = PrincipalComponents(target_ratio=0.85).fit(data)
        assert model.n_components_ == 1
        assert model.retained_ratio_ == pytest.approx(1.0)
        component = model.components_[0]
        np.testing.assert_allclose(np.abs(component), [0, 1, 0, 0], atol=1e-9)
        assert component[1] > 0  # sign convention

    def test_anisotropic_gaussian_against_oracle(self):
        rng = np.random.default_rng(3)
        cov = np.diag([9.0, 1.0, 0.0, 0.0, 0.0])
        data = rng.multivariate_normal(np.zeros(5), cov, size=500)
        model = PrincipalComponents(target_ratio=0.85).fit(data)
        centered = data - data.mean(axis=0)
        oracle_vals = np.sort(
            np.linalg.eigvalsh(centered.T @ centered / (len(data) - 1))
        )[::-1]
        np.testing.assert_allclose(model.spectrum_, oracle_vals, atol=1e-9)
        assert model.spectrum_[0] == pytest.approx(9.0, rel=0.15)
        assert model.spectrum_[1] == pytest.approx(1.0, rel=0.15)
        assert model.n_components_ == 1  # 9/10 > 0.85 on this draw

    def test_single_sample_rejected(self):
        with pytest.raises(InsufficientData):
            PrincipalComponents().fit(np.ones((1, 3)))

    def test_non_finite_rejected(self):
        data = np.ones((5, 3))
        data[2, 1] = np.nan
        with pytest.raises(InvalidData):
            PrincipalComponents().fit(data)

    def test_projection_centers_mean_to_zero(self):
        rng = np.random.default_rng(4)
        data = rng.normal(0, 1, (60, 6))
        model = PrincipalComponents(target_ratio=1.0).fit(data)
        projected = model.transform(data.mean(axis=0))
        np.testing.assert_allclose(projected, 0.0, atol=1e-9)

    def test_projection_along_first_axis(self):
        rng = np.random.default_rng(5)
        data = np.zeros((40, 3))
        data[:, 0] = rng.normal(0, 2, 40)
        model = PrincipalComponents(target_ratio=0.85).fit(data)
        y = model.transform(data.mean(axis=0) + 2.0 * np.array([1.0, 0.0, 0.0]))
        assert y.shape == (1,)
        assert abs(y[0]) == pytest.approx(2.0, abs=1e-9)
        assert y[0] == pytest.approx(2.0)  # positive by sign convention

    def test_dimension_mismatch(self):
        model = PrincipalComponents().fit(np.random.default_rng(6).normal(size=(10, 4)))
        with pytest.raises(DimensionError):
            model.transform(np.ones(3))

    def test_unfitted_raises(self):
        with pytest.raises(NotFittedError):
            PrincipalComponents().transform(np.ones(3))

    def test_reconstruction_error_identity(self):
        rng = np.random.default_rng(7)
        data = rng.normal(0, 1, (80, 10)) @ np.diag(np.linspace(3, 0.1, 10))
        model = PrincipalComponents(target_ratio=0.7).fit(data)
        centered = data - model.mean_
        projected = centered @ model.components_.T
        reconstructed = projected @ model.components_
        residual = np.sum((centered - reconstructed) ** 2)
        expected = (1.0 - model.retained_ratio_) * model.spectrum_.sum() * (len(data) - 1)
        assert residual == pytest.approx(expected, rel=1e-6)

    def test_contributions_sum_to_one(self):
        rng = np.random.default_rng(8)
        data = rng.normal(0, 1, (50, 12))
        model = PrincipalComponents(target_ratio=0.9).fit(data)
        assert model.contributions_.sum() == pytest.approx(1.0, abs=1e-10)

    def test_minimal_component_count(self):
        rng = np.random.default_rng(9)
        data = rng.normal(0, 1, (200, 8)) @ np.diag([5, 3, 2, 1, 0.5, 0.3, 0.2, 0.1])
        model = PrincipalComponents(target_ratio=0.85).fit(data)
        k = model.n_components_
        cumulative = np.cumsum(model.contributions_)
        assert cumulative[k - 1] >= 0.85
        if k > 1:
            assert cumulative[k - 2] < 0.85

    def test_round_trip_serialization(self):
        rng = np.random.default_rng(10)
        data = rng.normal(0, 1, (30, 5))
        model = PrincipalComponents(target_ratio=0.9).fit(data)
        clone = PrincipalComponents.from_dict(model.to_dict())
        x = rng.normal(0, 1, 5)
        np.testing.assert_allclose(clone.transform(x), model.transform(x))

    def test_deterministic_components(self):
        rng = np.random.default_rng(11)
        data = rng.normal(0, 1, (40, 6))
        a = PrincipalComponents(target_ratio=0.9).fit(data)
        b = PrincipalComponents(target_ratio=0.9).fit(data.copy())
        np.testing.assert_array_equal(a.components_, b.components_)


class TestFeatureScaler:
    def test_standardizes_columns(self):
        rng = np.random.default_rng(12)
        data = rng.normal(5, 3, (100, 4))
        scaler = FeatureScaler().fit(data)
        out = scaler.transform(data)
        np.testing.assert_allclose(out.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.std(axis=0), 1.0, atol=1e-12)

    def test_constant_column_passes_through(self):
        data = np.column_stack([np.ones(10), np.arange(10.0)])
        scaler = FeatureScaler().fit(data)
        out = scaler.transform(data)
        np.testing.assert_allclose(out[:, 0], 0.0)

    def test_round_trip_serialization(self):
        data = np.random.default_rng(13).normal(size=(20, 3))
        scaler = FeatureScaler().fit(data)
        clone = FeatureScaler.from_dict(scaler.to_dict())
        np.testing.assert_array_equal(clone.transform(data), scaler.transform(data))

    def test_get_params_round_trip(self):
        model = PrincipalComponents(target_ratio=0.7)
        assert model.get_params() == {"target_ratio": 0.7}
        model.set_params(target_ratio=0.9)
        assert model.target_ratio == 0.9
