"""Multiclass flight-state recognition with a decision DAG of pairwise SVMs.

Every unordered pair of classes gets one soft-margin SVM trained by
sequential minimal optimization. Classification walks the rooted DAG: the
first node compares the first and last class of the ordering, each verdict
eliminates one class, and after ``n_classes - 1`` binary evaluations a single
class remains. Only the sign of each node's decision value matters.

The pairwise trainings are independent of each other (each draws its
randomness from its own spawned seed), so they could run concurrently; the
assembled classifier is immutable and reentrant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .errors import (
    ConvergenceFailure,
    DegenerateLabels,
    DimensionError,
    InsufficientData,
    MetricUndefined,
)

DEFAULT_ALPHA = 0.7  # precision weight in the weighted F1


def kernel_matrix(kind: str, gamma: float, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Gram matrix between row sets X and Y for a linear or RBF kernel."""
    if kind == "linear":
        return X @ Y.T
    if kind == "rbf":
        sq = (
            np.sum(X * X, axis=1)[:, None]
            + np.sum(Y * Y, axis=1)[None, :]
            - 2.0 * (X @ Y.T)
        )
        return np.exp(-gamma * np.maximum(sq, 0.0))
    raise ValueError(f"unknown kernel {kind!r}")


@dataclass
class PairwiseSvm:
    """One trained binary classifier for an unordered class pair.

    ``decision(x) >= 0`` votes for ``class_pair[0]``, negative for
    ``class_pair[1]``. ``dual_coef`` stores ``alpha_i * y_i`` for the
    retained support vectors.
    """

    support_vectors: np.ndarray
    dual_coef: np.ndarray
    bias: float
    kernel: str
    gamma: float
    class_pair: tuple[str, str]

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.support_vectors.shape[1]:
            raise DimensionError(
                f"expected {self.support_vectors.shape[1]} features, got {X.shape[1]}"
            )
        K = kernel_matrix(self.kernel, self.gamma, X, self.support_vectors)
        return K @ self.dual_coef + self.bias

    def to_dict(self) -> dict:
        return {
            "support_vectors": self.support_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "bias": self.bias,
            "kernel": self.kernel,
            "gamma": self.gamma,
            "class_pair": list(self.class_pair),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "PairwiseSvm":
        return cls(
            support_vectors=np.asarray(payload["support_vectors"], dtype=float),
            dual_coef=np.asarray(payload["dual_coef"], dtype=float),
            bias=float(payload["bias"]),
            kernel=payload["kernel"],
            gamma=float(payload["gamma"]),
            class_pair=tuple(payload["class_pair"]),
        )


def smo_train(
    X: np.ndarray,
    y: np.ndarray,
    C: float,
    kernel: str,
    gamma: float,
    tol: float = 1e-3,
    quiet_passes: int = 10,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, float]:
    """Solve the soft-margin dual with simplified SMO coordinate updates.

    Stops after ``quiet_passes`` consecutive full passes without an update.
    Raises ConvergenceFailure if the hard budget of ``10 * n_samples`` passes
    is exhausted while updates are still occurring.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    n = X.shape[0]
    if n < 2 or len(np.unique(y)) < 2:
        raise DegenerateLabels("both classes must be present")
    if not C > 0:
        raise ValueError("C must be positive")
    K = kernel_matrix(kernel, gamma, X, X)
    alphas = np.zeros(n)
    b = 0.0
    max_passes = 10 * max(n, 10)
    quiet = 0
    for _ in range(max_passes):
        changed = 0
        for i in range(n):
            Ei = float(K[i] @ (alphas * y) + b - y[i])
            if not (
                (y[i] * Ei < -tol and alphas[i] < C)
                or (y[i] * Ei > tol and alphas[i] > 0)
            ):
                continue
            j = int(rng.integers(n - 1))
            if j >= i:
                j += 1
            Ej = float(K[j] @ (alphas * y) + b - y[j])
            ai_old, aj_old = alphas[i], alphas[j]
            if y[i] == y[j]:
                lo = max(0.0, ai_old + aj_old - C)
                hi = min(C, ai_old + aj_old)
            else:
                lo = max(0.0, aj_old - ai_old)
                hi = min(C, C + aj_old - ai_old)
            if hi - lo < 1e-12:
                continue
            eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
            if eta >= 0:
                continue
            aj = aj_old - y[j] * (Ei - Ej) / eta
            aj = min(hi, max(lo, aj))
            if abs(aj - aj_old) < 1e-7:
                continue
            ai = ai_old + y[i] * y[j] * (aj_old - aj)
            alphas[i], alphas[j] = ai, aj
            b1 = b - Ei - y[i] * (ai - ai_old) * K[i, i] - y[j] * (aj - aj_old) * K[i, j]
            b2 = b - Ej - y[i] * (ai - ai_old) * K[i, j] - y[j] * (aj - aj_old) * K[j, j]
            if 0 < ai < C:
                b = b1
            elif 0 < aj < C:
                b = b2
            else:
                b = 0.5 * (b1 + b2)
            changed += 1
        quiet = quiet + 1 if changed == 0 else 0
        if quiet >= quiet_passes:
            return alphas, b
    raise ConvergenceFailure(f"SMO still updating after {max_passes} passes")


def kkt_violation(
    X: np.ndarray,
    y: np.ndarray,
    alphas: np.ndarray,
    b: float,
    C: float,
    kernel: str,
    gamma: float,
) -> float:
    """Largest violation of the box KKT conditions at the given dual point."""
    margins = y * (kernel_matrix(kernel, gamma, X, X) @ (alphas * y) + b)
    worst = 0.0
    for m, a in zip(margins, alphas):
        if a <= 1e-10:
            worst = max(worst, 1.0 - m)
        elif a >= C - 1e-10:
            worst = max(worst, m - 1.0)
        else:
            worst = max(worst, abs(m - 1.0))
    return float(worst)


def svm_train(
    X: np.ndarray,
    y: np.ndarray,
    C: float = 10.0,
    kernel: str = "rbf",
    gamma: float | None = None,
    tol: float = 1e-3,
    class_pair: tuple[str, str] = ("+", "-"),
    rng: np.random.Generator | None = None,
) -> PairwiseSvm:
    """Train one binary SVM; labels must be +1/-1 with both classes present."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if set(np.unique(y)) - {1.0, -1.0}:
        raise ValueError("labels must be +1 or -1")
    if len(np.unique(y)) < 2:
        raise DegenerateLabels("training data contains a single class")
    if gamma is None:
        gamma = 1.0 / X.shape[1]
    alphas, b = smo_train(X, y, C, kernel, gamma, tol=tol, rng=rng)
    keep = alphas > 1e-10
    return PairwiseSvm(
        support_vectors=X[keep],
        dual_coef=(alphas * y)[keep],
        bias=b,
        kernel=kernel,
        gamma=gamma,
        class_pair=class_pair,
    )


class DagSvmClassifier(BaseEstimator, ClassifierMixin):
    """Decision-DAG multiclass SVM over all pairwise classifiers.

    Parameters
    ----------
    C : float, default 10.0
        Soft-margin penalty shared by every pairwise problem.
    kernel : 'rbf' or 'linear', default 'rbf'
    gamma : float or 'auto', default 'auto'
        RBF width; 'auto' means 1 / n_features.
    tol : float, default 1e-3
        SMO KKT tolerance.
    seed : int, default 0
        Root seed; each pairwise training spawns its own generator from it.
    """

    def __init__(
        self,
        C: float = 10.0,
        kernel: str = "rbf",
        gamma: float | str = "auto",
        tol: float = 1e-3,
        seed: int = 0,
    ):
        self.C = C
        self.kernel = kernel
        self.gamma = gamma
        self.tol = tol
        self.seed = seed

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        labels = np.asarray([str(v) for v in y])
        if X.shape[0] != labels.shape[0]:
            raise DimensionError("X and y lengths differ")
        classes = sorted(set(labels.tolist()))
        if len(classes) < 2:
            raise DegenerateLabels("need at least two classes")
        gamma = 1.0 / X.shape[1] if self.gamma == "auto" else float(self.gamma)
        self.classes_ = np.asarray(classes)
        self.order_ = list(classes)
        self.gamma_ = gamma
        self.n_features_in_ = X.shape[1]
        self.classifiers_ = {}
        pairs = [
            (classes[i], classes[j])
            for i in range(len(classes))
            for j in range(i + 1, len(classes))
        ]
        for index, (first, second) in enumerate(pairs):
            mask = (labels == first) | (labels == second)
            signs = np.where(labels[mask] == first, 1.0, -1.0)
            rng = np.random.default_rng(
                np.random.SeedSequence([self.seed, index])
            )
            self.classifiers_[(first, second)] = svm_train(
                X[mask],
                signs,
                C=self.C,
                kernel=self.kernel,
                gamma=gamma,
                tol=self.tol,
                class_pair=(first, second),
                rng=rng,
            )
        return self

    def _node(self, first: str, second: str) -> tuple[PairwiseSvm, bool]:
        """Fetch the classifier for a pair; flip if stored in swapped order."""
        if (first, second) in self.classifiers_:
            return self.classifiers_[(first, second)], False
        return self.classifiers_[(second, first)], True

    def decision_path(self, x) -> tuple[str, list[tuple[tuple[str, str], str]]]:
        """Classify one vector, returning the survivor and the node verdicts."""
        self._check_fitted()
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.size != self.n_features_in_:
            raise DimensionError(
                f"expected {self.n_features_in_} features, got {x.size}"
            )
        active = list(self.order_)
        path = []
        while len(active) > 1:
            first, last = active[0], active[-1]
            svm, flipped = self._node(first, last)
            value = float(svm.decision(x)[0])
            if flipped:
                value = -value
            winner = first if value >= 0 else last
            loser = last if winner == first else first
            path.append(((first, last), winner))
            active.remove(loser)
        return active[0], path

    def predict(self, X):
        self._check_fitted()
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.asarray([self.decision_path(row)[0] for row in X])

    def _check_fitted(self):
        if not hasattr(self, "classifiers_"):
            raise NotFittedError("DagSvmClassifier instance is not fitted")

    def to_dict(self) -> dict:
        self._check_fitted()
        return {
            "order": self.order_,
            "C": self.C,
            "kernel": self.kernel,
            "gamma": self.gamma_,
            "tol": self.tol,
            "seed": self.seed,
            "n_features": self.n_features_in_,
            "classifiers": [
                svm.to_dict() for _, svm in sorted(self.classifiers_.items())
            ],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "DagSvmClassifier":
        model = cls(
            C=payload["C"],
            kernel=payload["kernel"],
            gamma=payload["gamma"],
            tol=payload["tol"],
            seed=payload.get("seed", 0),
        )
        model.order_ = list(payload["order"])
        model.classes_ = np.asarray(sorted(model.order_))
        model.gamma_ = float(payload["gamma"])
        model.n_features_in_ = int(payload["n_features"])
        model.classifiers_ = {}
        for entry in payload["classifiers"]:
            svm = PairwiseSvm.from_dict(entry)
            model.classifiers_[svm.class_pair] = svm
        return model


def weighted_f1(precision: float, recall: float, alpha: float = DEFAULT_ALPHA) -> float:
    """Weighted harmonic mean of precision and recall with weight on precision.

    ``alpha = 0.5`` reduces to the standard F1 score.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if precision <= 0.0 or recall <= 0.0:
        raise MetricUndefined("precision and recall must be positive")
    if precision > 1.0 or recall > 1.0:
        raise ValueError("precision and recall cannot exceed 1")
    return 1.0 / (alpha / precision + (1.0 - alpha) / recall)


@dataclass
class ConfusionMatrix:
    """Row-true, column-predicted counts over a fixed label ordering."""

    labels: tuple[str, ...]
    counts: np.ndarray

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "counts": self.counts.tolist()}


def evaluate_classifier(
    y_true,
    y_pred,
    labels: list[str] | None = None,
    alpha: float = DEFAULT_ALPHA,
) -> tuple[ConfusionMatrix, dict[str, dict[str, float]]]:
    """Confusion matrix plus per-class precision, recall and weighted F1.

    Classes never predicted (or absent) get precision/recall 0 and, since the
    weighted harmonic mean is undefined there, an F1 of 0 by convention.
    """
    truths = [str(v) for v in y_true]
    preds = [str(v) for v in y_pred]
    if len(truths) == 0:
        raise InsufficientData("empty evaluation set")
    if len(truths) != len(preds):
        raise DimensionError("prediction and truth lengths differ")
    if labels is None:
        labels = sorted(set(truths) | set(preds))
    index = {label: i for i, label in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=int)
    for t, p in zip(truths, preds):
        counts[index[t], index[p]] += 1
    metrics = {}
    for label, i in index.items():
        tp = int(counts[i, i])
        fp = int(counts[:, i].sum() - tp)
        fn = int(counts[i, :].sum() - tp)
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        score = (
            weighted_f1(precision, recall, alpha)
            if precision > 0 and recall > 0
            else 0.0
        )
        metrics[label] = {
            "precision": precision,
            "recall": recall,
            "f1": score,
            "support": int(counts[i, :].sum()),
        }
    return ConfusionMatrix(tuple(labels), counts), metrics
