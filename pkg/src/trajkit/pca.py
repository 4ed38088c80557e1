"""Principal-component projection with a cumulative-contribution cutoff.

The estimator centers each column, forms the sample covariance
``C = X^T X / (m - 1)``, diagonalizes it with cyclic Jacobi sweeps and keeps
the smallest number of leading components whose cumulative eigenvalue share
reaches the target ratio. A companion ``FeatureScaler`` provides the
unit-variance scaling the classification pipeline applies before projection;
the projection itself stays center-only.

Fitted models are immutable in practice and safe to share across threads.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .errors import ConvergenceFailure, DimensionError, InsufficientData, InvalidData

JACOBI_REL_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


def jacobi_eigh(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps continue until every off-diagonal magnitude drops below
    ``JACOBI_REL_TOL`` times the Frobenius norm of the input. Returns
    eigenvalues in descending order and the matching eigenvectors as rows.
    """
    a = np.array(matrix, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise DimensionError("jacobi_eigh expects a square matrix")
    if not np.allclose(a, a.T, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise InvalidData("matrix is not symmetric")
    v = np.eye(n)
    threshold = JACOBI_REL_TOL * max(np.linalg.norm(a, "fro"), np.finfo(float).tiny)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.abs(a - np.diag(np.diag(a))).max() if n > 1 else 0.0
        if off < threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < threshold:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                rot = np.array([[c, -s], [s, c]])
                a[[p, q], :] = rot @ a[[p, q], :]
                a[:, [p, q]] = a[:, [p, q]] @ rot.T
                v[[p, q], :] = rot @ v[[p, q], :]
    else:
        raise ConvergenceFailure("jacobi sweeps did not reach tolerance")
    eigenvalues = np.diag(a).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    return eigenvalues[order], v[order, :]


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Make each component's largest-magnitude entry nonnegative."""
    out = components.copy()
    for i, row in enumerate(out):
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            out[i] = -row
    return out


class PrincipalComponents(BaseEstimator, TransformerMixin):
    """Center-only PCA keeping enough components to reach ``target_ratio``.

    Parameters
    ----------
    target_ratio : float in (0, 1], default 0.85
        Minimum cumulative eigenvalue share retained.

    Attributes (after fit)
    ----------------------
    mean_ : (n_features,) column means of the training data.
    components_ : (n_components_, n_features) orthonormal rows.
    eigenvalues_ : retained eigenvalues, descending.
    spectrum_ : full eigenvalue spectrum, descending.
    contributions_ : spectrum_ normalized to sum to one.
    retained_ratio_ : achieved cumulative share of the retained block.
    """

    def __init__(self, target_ratio: float = 0.85):
        self.target_ratio = target_ratio

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] < 1:
            raise InvalidData("expected a 2-D data matrix")
        if X.shape[0] < 2:
            raise InsufficientData("PCA needs at least 2 samples")
        if not np.all(np.isfinite(X)):
            raise InvalidData("data contains non-finite entries")
        if not 0.0 < self.target_ratio <= 1.0:
            raise ValueError("target_ratio must lie in (0, 1]")
        mean = X.mean(axis=0)
        centered = X - mean
        cov = centered.T @ centered / (X.shape[0] - 1)
        eigenvalues, vectors = jacobi_eigh(cov)
        total = float(eigenvalues.sum())
        if total <= 0.0:
            raise InvalidData("data has zero total variance")
        contributions = eigenvalues / total
        cumulative = np.cumsum(contributions)
        k = int(np.searchsorted(cumulative, self.target_ratio - 1e-12) + 1)
        k = min(k, eigenvalues.size)
        self.mean_ = mean
        self.components_ = _fix_signs(vectors[:k])
        self.eigenvalues_ = eigenvalues[:k]
        self.spectrum_ = eigenvalues
        self.contributions_ = contributions
        self.retained_ratio_ = float(cumulative[k - 1])
        self.n_components_ = k
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        self._check_fitted()
        x = np.asarray(X, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[np.newaxis, :]
        if x.ndim != 2 or x.shape[1] != self.n_features_in_:
            raise DimensionError(
                f"expected {self.n_features_in_} features, got {x.shape[-1]}"
            )
        projected = (x - self.mean_) @ self.components_.T
        return projected[0] if single else projected

    def _check_fitted(self):
        if not hasattr(self, "components_"):
            raise NotFittedError("PrincipalComponents instance is not fitted")

    def to_dict(self) -> dict:
        self._check_fitted()
        return {
            "mean": self.mean_.tolist(),
            "components": self.components_.tolist(),
            "eigenvalues": self.eigenvalues_.tolist(),
            "retained_ratio": self.retained_ratio_,
            "n": self.n_features_in_,
            "k": self.n_components_,
            "spectrum": self.spectrum_.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "PrincipalComponents":
        model = cls()
        model.mean_ = np.asarray(payload["mean"], dtype=float)
        model.components_ = np.asarray(payload["components"], dtype=float)
        model.eigenvalues_ = np.asarray(payload["eigenvalues"], dtype=float)
        model.retained_ratio_ = float(payload["retained_ratio"])
        model.n_features_in_ = int(payload["n"])
        model.n_components_ = int(payload["k"])
        spectrum = payload.get("spectrum", payload["eigenvalues"])
        model.spectrum_ = np.asarray(spectrum, dtype=float)
        model.contributions_ = model.spectrum_ / model.spectrum_.sum()
        return model


class FeatureScaler(BaseEstimator, TransformerMixin):
    """Per-column standardization: subtract mean, divide by population std.

    Columns with zero spread keep scale 1 so constant features pass through
    centered. Used ahead of PCA because the raw feature columns mix metres,
    radians and 1/m; without it the position statistics dominate every
    eigenvalue.
    """

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1:
            raise InvalidData("expected a non-empty 2-D matrix")
        if not np.all(np.isfinite(X)):
            raise InvalidData("data contains non-finite entries")
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        # float-dust spread must count as constant or it amplifies noise
        degenerate = std <= 1e-9 * np.maximum(1.0, np.abs(self.mean_))
        std[degenerate] = 1.0
        self.scale_ = std
        return self

    def transform(self, X):
        if not hasattr(self, "scale_"):
            raise NotFittedError("FeatureScaler instance is not fitted")
        x = np.asarray(X, dtype=float)
        if x.shape[-1] != self.mean_.size:
            raise DimensionError(
                f"expected {self.mean_.size} features, got {x.shape[-1]}"
            )
        return (x - self.mean_) / self.scale_

    def to_dict(self) -> dict:
        return {"mean": self.mean_.tolist(), "scale": self.scale_.tolist()}

    @classmethod
    def from_dict(cls, payload: dict) -> "FeatureScaler":
        scaler = cls()
        scaler.mean_ = np.asarray(payload["mean"], dtype=float)
        scaler.scale_ = np.asarray(payload["scale"], dtype=float)
        return scaler
