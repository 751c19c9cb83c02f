"""Pitch-type identification from trajectories.

A batter's *believed* trajectory is the true 300-value trajectory plus
independent uniform [-1, 1] noise scaled by the batter's strikeout rate.
Pitch classes are predicted by a one-vs-one soft-margin SVM with the
inhomogeneous quadratic kernel ``K(x, y) = (1 + x.y / s)**2`` on standardized
inputs, trained by sequential minimal optimization.

Noise is drawn from a numpy ``Generator`` (PCG64), 300 values per trajectory
in coordinate order; see :mod:`atbat_mdp.seeding` for how streams are seeded.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import EmptyData, SingleClassData, ZeroPlateAppearances
from .ingest import AtBatRecord, classify_pitch, expand_trajectory
from .states import PitchClass

TRAJECTORY_POINTS = 100
TRAJECTORY_DIM = 3 * TRAJECTORY_POINTS
NOISE_RNG = "numpy.random.PCG64"
CLASSIFIER_FORMAT_VERSION = 1


def quadratic_kernel(A: np.ndarray, B: np.ndarray, scale: float) -> np.ndarray:
    return (1.0 + (A @ B.T) / scale) ** 2


def smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float = 1e-3, max_iter: int = 1_000_000):
    """Solve the soft-margin SVM dual for one binary problem.

    Minimizes ``0.5 a'Qa - sum(a)`` with ``Q_ij = y_i y_j K_ij``, ``0 <= a <= C``
    and ``y'a = 0``. Working pairs are picked by maximal violation for the
    first index and second-order gain for the second, and iteration stops
    when the KKT violation falls below ``tol``.

    Returns ``(alpha, rho, n_iter)``; the decision value is
    ``sum_i alpha_i y_i K(x_i, x) - rho``.
    """
    n = len(y)
    y = y.astype(float)
    alpha = np.zeros(n)
    grad = -np.ones(n)
    diag = np.diag(K).copy()
    tau = 1e-12
    it = 0
    while it < max_iter:
        yg = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            break
        i = int(np.flatnonzero(up)[np.argmax(yg[up])])
        g_max = yg[i]
        g_min = yg[low].min()
        if g_max - g_min < tol:
            break
        b = g_max - yg
        cand = low & (b > 0)
        a = diag[i] + diag - 2.0 * K[i]
        a = np.where(a > 0, a, tau)
        gain = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(gain))
        it += 1

        old_i, old_j = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = max(diag[i] + diag[j] - 2.0 * K[i, j], tau)
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            elif alpha[j] > C:
                alpha[j] = C
                alpha[i] = C + diff
        else:
            quad = max(diag[i] + diag[j] - 2.0 * K[i, j], tau)
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            elif alpha[j] < 0:
                alpha[j] = 0.0
                alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = total

        d_i, d_j = alpha[i] - old_i, alpha[j] - old_j
        grad += y * (K[:, i] * (y[i] * d_i) + K[:, j] * (y[j] * d_j))

    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(yg[free].mean())
    else:
        ub_mask = ((y > 0) & (alpha >= C)) | ((y < 0) & (alpha <= 0))
        lb_mask = ((y > 0) & (alpha <= 0)) | ((y < 0) & (alpha >= C))
        ub = yg[ub_mask].min() if ub_mask.any() else np.inf
        lb = yg[lb_mask].max() if lb_mask.any() else -np.inf
        rho = float((ub + lb) / 2) if np.isfinite(ub) and np.isfinite(lb) else float(ub if np.isfinite(ub) else lb)
    return alpha, rho, it


def dual_objective(alpha: np.ndarray, K: np.ndarray, y: np.ndarray) -> float:
    ay = alpha * y
    return float(0.5 * ay @ K @ ay - alpha.sum())


class QuadraticKernelSVC(ClassifierMixin, BaseEstimator):
    """One-vs-one soft-margin SVM with a quadratic kernel.

    Parameters
    ----------
    C : float
        Soft-margin penalty.
    tol : float
        KKT tolerance for SMO.
    kernel_scale : float or None
        ``s`` in ``(1 + x.y / s)**2``; None uses the number of features.
    max_iter : int
        SMO iteration cap per binary problem.
    """

    def __init__(self, C: float = 1.0, tol: float = 1e-3, kernel_scale: Optional[float] = None, max_iter: int = 1_000_000):
        self.C = C
        self.tol = tol
        self.kernel_scale = kernel_scale
        self.max_iter = max_iter

    def _standardize(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean_) / self.scale_

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        classes, class_counts = np.unique(y, return_counts=True)
        if len(classes) < 2:
            raise SingleClassData("need at least two classes to train")
        self.classes_ = classes
        self.class_counts_ = class_counts
        self.n_features_in_ = X.shape[1]
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        # constant coordinates are left unscaled
        self.scale_ = np.where(std > 0, std, 1.0)
        self.kernel_scale_ = float(self.kernel_scale or X.shape[1])
        Z = self._standardize(X)
        K = quadratic_kernel(Z, Z, self.kernel_scale_)

        self.pairs_ = []
        self.n_iter_ = []
        for a, b in itertools.combinations(range(len(classes)), 2):
            idx = np.flatnonzero((y == classes[a]) | (y == classes[b]))
            yy = np.where(y[idx] == classes[a], 1.0, -1.0)
            alpha, rho, n_iter = smo_solve(K[np.ix_(idx, idx)], yy, self.C, self.tol, self.max_iter)
            sv = alpha > 0
            self.pairs_.append({
                "classes": (a, b),
                "support_vectors": Z[idx[sv]],
                "dual_coef": alpha[sv] * yy[sv],
                "intercept": -rho,
            })
            self.n_iter_.append(n_iter)
        return self

    def pairwise_decisions(self, X) -> np.ndarray:
        """Decision value per class pair, shape (n_samples, n_pairs); positive favours the first class."""
        check_is_fitted(self, "pairs_")
        X = check_array(X, dtype=float)
        Z = self._standardize(X)
        out = np.empty((len(Z), len(self.pairs_)))
        for k, pair in enumerate(self.pairs_):
            Kx = quadratic_kernel(Z, pair["support_vectors"], self.kernel_scale_)
            out[:, k] = Kx @ pair["dual_coef"] + pair["intercept"]
        return out

    def decision_function(self, X) -> np.ndarray:
        """Votes plus aggregate margins scaled into (-0.5, 0.5), per class."""
        votes, margins = self._votes(self.pairwise_decisions(X))
        return votes + margins / (2.0 * (np.abs(margins).max(axis=1, keepdims=True) + 1.0))

    def _votes(self, dec: np.ndarray):
        n_cls = len(self.classes_)
        votes = np.zeros((len(dec), n_cls))
        margins = np.zeros((len(dec), n_cls))
        for k, pair in enumerate(self.pairs_):
            a, b = pair["classes"]
            d = dec[:, k]
            votes[:, a] += d > 0
            votes[:, b] += d <= 0
            margins[:, a] += d
            margins[:, b] -= d
        return votes, margins

    def predict(self, X) -> np.ndarray:
        votes, margins = self._votes(self.pairwise_decisions(X))
        # most votes; ties go to the larger aggregate margin, then the lower class
        winners = np.empty(len(votes), dtype=int)
        for r in range(len(votes)):
            top = np.flatnonzero(votes[r] == votes[r].max())
            winners[r] = top[np.argmax(margins[r, top])]
        return self.classes_[winners]

    @property
    def chance_threshold_(self) -> float:
        check_is_fitted(self, "class_counts_")
        return float(self.class_counts_.max() / self.class_counts_.sum())

    def to_dict(self) -> dict:
        check_is_fitted(self, "pairs_")
        return {
            "v": CLASSIFIER_FORMAT_VERSION,
            "noise_rng": NOISE_RNG,
            "seeding": "child seed = first 8 bytes of sha256('<master>/<stage>/<ids...>'), big-endian",
            "kernel": "(1 + x.y/s)^2",
            "params": self.get_params(),
            "classes": [int(c) for c in self.classes_],
            "class_counts": [int(c) for c in self.class_counts_],
            "mean": self.mean_.tolist(),
            "scale": self.scale_.tolist(),
            "kernel_scale": self.kernel_scale_,
            "pairs": [
                {
                    "classes": list(p["classes"]),
                    "support_vectors": p["support_vectors"].tolist(),
                    "dual_coef": p["dual_coef"].tolist(),
                    "intercept": p["intercept"],
                }
                for p in self.pairs_
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuadraticKernelSVC":
        clf = cls(**d["params"])
        clf.classes_ = np.asarray(d["classes"])
        clf.class_counts_ = np.asarray(d["class_counts"])
        clf.mean_ = np.asarray(d["mean"], dtype=float)
        clf.scale_ = np.asarray(d["scale"], dtype=float)
        clf.n_features_in_ = len(clf.mean_)
        clf.kernel_scale_ = float(d["kernel_scale"])
        clf.pairs_ = [
            {
                "classes": tuple(p["classes"]),
                "support_vectors": np.asarray(p["support_vectors"], dtype=float).reshape(-1, clf.n_features_in_),
                "dual_coef": np.asarray(p["dual_coef"], dtype=float),
                "intercept": float(p["intercept"]),
            }
            for p in d["pairs"]
        ]
        return clf

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "QuadraticKernelSVC":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


SpatialClassifier = QuadraticKernelSVC


@dataclass(frozen=True)
class LabeledTrajectory:
    x: np.ndarray
    label: PitchClass


@dataclass(frozen=True)
class BatterProfile:
    batter_id: str
    strikeouts: int
    plate_appearances: int
    pitcher_id: Optional[str] = None

    @property
    def alpha(self) -> float:
        return compute_alpha(self.strikeouts, self.plate_appearances)


def compute_alpha(strikeouts: int, plate_appearances: int) -> float:
    """Strikeouts per plate appearance."""
    if plate_appearances < 1:
        raise ZeroPlateAppearances("plate_appearances must be at least 1")
    if not 0 <= strikeouts <= plate_appearances:
        raise ValueError("strikeouts must lie between 0 and plate_appearances")
    return strikeouts / plate_appearances


def believed_trajectory(x: np.ndarray, alpha: float, rng: np.random.Generator) -> np.ndarray:
    """``x`` plus ``alpha``-scaled uniform [-1, 1] noise, one draw per coordinate in order."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    x = np.asarray(x, dtype=float)
    if alpha == 0:
        return x.copy()
    return x + alpha * rng.uniform(-1.0, 1.0, size=x.shape)


class BelievedTrajectoryNoise(TransformerMixin, BaseEstimator):
    """Transformer adding a batter's perception noise to trajectory rows."""

    def __init__(self, alpha: float = 0.0, random_state: Optional[int] = None):
        self.alpha = alpha
        self.random_state = random_state

    def fit(self, X, y=None):
        self.n_features_in_ = check_array(X).shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, dtype=float)
        rng = np.random.Generator(np.random.PCG64(self.random_state))
        return np.vstack([believed_trajectory(row, self.alpha, rng) for row in X]) if len(X) else X.copy()


def _as_arrays(data: Sequence[LabeledTrajectory]):
    X = np.vstack([np.asarray(d.x, dtype=float) for d in data])
    y = np.array([int(d.label) for d in data])
    return X, y


def train_classifier(data: Sequence[LabeledTrajectory], cfg: Optional[dict] = None) -> QuadraticKernelSVC:
    if not data:
        raise EmptyData("no training trajectories")
    X, y = _as_arrays(data)
    return QuadraticKernelSVC(**(cfg or {})).fit(X, y)


def chance_threshold(data: Union[Sequence[LabeledTrajectory], Sequence[int], np.ndarray]) -> float:
    """Share of the most common class."""
    labels = [int(d.label) if isinstance(d, LabeledTrajectory) else int(d) for d in data]
    if not labels:
        raise EmptyData("no labels")
    _, counts = np.unique(labels, return_counts=True)
    return float(counts.max() / len(labels))


def gate_batter(
    classifier: QuadraticKernelSVC,
    test_data: Sequence[LabeledTrajectory],
    profile: Union[BatterProfile, float],
    rng: np.random.Generator,
) -> tuple[float, bool]:
    """Accuracy on the batter's believed trajectories, and whether it beats chance.

    ``profile`` may also be a bare noise level, for probing values of alpha
    outside what a strikeout rate can produce.
    """
    if not test_data:
        raise EmptyData("no test trajectories")
    alpha = profile.alpha if isinstance(profile, BatterProfile) else float(profile)
    X, y = _as_arrays(test_data)
    believed = np.vstack([believed_trajectory(row, alpha, rng) for row in X])
    accuracy = float(np.mean(classifier.predict(believed) == y))
    return accuracy, accuracy > classifier.chance_threshold_


def labeled_trajectories(atbats: Iterable[AtBatRecord], mapping=None, m: int = TRAJECTORY_POINTS) -> list[LabeledTrajectory]:
    """Typed pitches that carry a trajectory, expanded to ``3 m`` coordinates."""
    out = []
    for ab in atbats:
        for p in ab.pitches:
            cls = classify_pitch(p.raw_type, mapping)
            if cls is not None and p.trajectory is not None:
                out.append(LabeledTrajectory(expand_trajectory(p.trajectory, m), cls))
    return out
