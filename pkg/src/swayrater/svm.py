"""Class-weighted soft-margin linear SVM and the one-vs-one wrapper.

The binary problem minimized is

    1/2 ||w||^2 + C * sum_i c_{y_i} * max(0, 1 - y_i (w.x_i + b))

with an unregularized bias and per-class costs c. It is solved in the
dual (see the solver package); the reported solution satisfies the
maximal-violating-pair condition m - M <= tolerance, and training is
deterministic for a fixed row order.

Multi-class training fits one binary classifier per unordered class pair
on the rows of those two classes, with per-class costs taken from the
full training distribution, not recomputed per pair. Prediction is by
majority vote; vote ties go to the largest sum of signed margins toward
each tied class, and any remaining tie to the smallest label.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import solver
from .kinematics import ScalerParams, fit_scaler, scale_matrix

log = logging.getLogger(__name__)

MODEL_FORMAT = "swayrater-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    """Solver settings shared by every fit.

    class_weights, when given, overrides the inverse-frequency weights
    computed from the training labels; every class present in the data
    must then have an entry.
    """

    C: float = 1.0
    class_weights: Mapping | None = None
    tolerance: float = 1e-6
    max_iterations: int = 10_000_000

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True)
class BinaryLinearSVM:
    """One trained pairwise classifier: f(x) = w.x + b.

    class_pair is (negative label, positive label); f(x) > 0 votes for
    the positive label. converged records whether the solver met its
    tolerance within the iteration budget.
    """

    w: np.ndarray
    b: float
    class_pair: tuple
    n_iterations: int = 0
    converged: bool = True

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64).copy()
        if w.ndim != 1:
            raise ValueError("w must be a vector")
        if not np.isfinite(w).all() or not np.isfinite(self.b):
            raise ValueError("non-finite model parameters")
        w.flags.writeable = False
        object.__setattr__(self, "w", w)


@dataclass(frozen=True)
class MultiClassSVM:
    classifiers: tuple[BinaryLinearSVM, ...]
    classes: tuple
    scaler: ScalerParams

    def __post_init__(self):
        object.__setattr__(self, "classifiers", tuple(self.classifiers))
        object.__setattr__(self, "classes", tuple(self.classes))
        k = len(self.classes)
        if len(self.classifiers) != k * (k - 1) // 2:
            raise ValueError("expected one classifier per unordered class pair")

    @property
    def converged(self) -> bool:
        return all(c.converged for c in self.classifiers)


def class_weights(labels) -> dict:
    """Inverse-frequency weights, normalized so their count-weighted mean is 1.

    weight_k = N / (K * n_k) for N examples over K distinct classes.
    """
    labels = list(labels)
    if not labels:
        raise ValueError("empty input")
    counts = Counter(labels)
    if len(counts) < 2:
        raise ValueError("single-class input, nothing to weight against")
    n_total = len(labels)
    k = len(counts)
    return {label: n_total / (k * n_k) for label, n_k in sorted(counts.items())}


def _prepare_xy(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    if y.shape != (X.shape[0],):
        raise ValueError("dimension mismatch between X and y")
    return X, y


def train_binary(X, y, C: float, cost_neg: float, cost_pos: float,
                 config: TrainConfig = TrainConfig(),
                 class_pair: tuple = (-1, 1)) -> BinaryLinearSVM:
    """Fit the weighted binary SVM on rows X with labels y in {-1, +1}.

    Non-convergence within config.max_iterations is logged and flagged on
    the returned model rather than raised; the best iterate is kept.
    """
    X, y = _prepare_xy(X, y)
    yf = np.where(np.asarray(y, dtype=np.float64) > 0, 1.0, -1.0)
    if not ((yf > 0).any() and (yf < 0).any()):
        raise ValueError("single-class input")
    if C <= 0 or cost_neg <= 0 or cost_pos <= 0:
        raise ValueError("C and class costs must be positive")

    U = np.where(yf > 0, C * cost_pos, C * cost_neg)
    K = X @ X.T
    model, _ = _train_binary_gram(X, yf, K, U, config, class_pair)
    return model


def _train_binary_gram(X, yf, K, U, config: TrainConfig,
                       class_pair: tuple, alpha0=None):
    # Core fit once the Gram matrix exists. The cross-validation sweep
    # calls this directly so one Gram serves every C value, optionally
    # warm-starting from a neighbouring C's solution. Returns the model
    # plus the dual variables so callers can chain warm starts.
    G0 = None
    if alpha0 is not None:
        alpha0 = np.minimum(np.maximum(alpha0, 0.0), U)
        G0 = (K @ (alpha0 * yf)) * yf - 1.0
    alpha, G, n_iter, converged = solver.solve(
        K, yf, U, config.tolerance, config.max_iterations, alpha0, G0
    )
    if not converged:
        log.warning(
            "solver stopped at max_iterations=%d without meeting tolerance",
            config.max_iterations,
        )
    w = (alpha * yf) @ X
    b = -_rho(alpha, G, yf, U)
    model = BinaryLinearSVM(
        w=w, b=float(b), class_pair=class_pair,
        n_iterations=n_iter, converged=converged,
    )
    return model, alpha


def _rho(alpha, G, y, U) -> float:
    # Bias offset from the KKT conditions: average y*G over free vectors,
    # else the midpoint of the feasible interval at the bounds.
    yG = y * G
    upper = alpha >= U
    lower = alpha <= 0.0
    free = ~(upper | lower)
    n_free = int(free.sum())
    if n_free > 0:
        return float(yG[free].sum() / n_free)
    ub_mask = (upper & (y < 0)) | (lower & (y > 0))
    lb_mask = (upper & (y > 0)) | (lower & (y < 0))
    ub = float(yG[ub_mask].min()) if ub_mask.any() else np.inf
    lb = float(yG[lb_mask].max()) if lb_mask.any() else -np.inf
    return (ub + lb) / 2.0


def decision_value(model: BinaryLinearSVM, x) -> float:
    """Linear score w.x + b; positive means the pair's positive label."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != model.w.shape:
        raise ValueError("dimension mismatch")
    return float(np.dot(model.w, x) + model.b)


def primal_objective(model: BinaryLinearSVM, X, y, C: float,
                     cost_neg: float, cost_pos: float) -> float:
    """Weighted-hinge objective of a model on its training data (diagnostic)."""
    X, y = _prepare_xy(X, y)
    yf = np.where(np.asarray(y, dtype=np.float64) > 0, 1.0, -1.0)
    margins = yf * (X @ model.w + model.b)
    costs = np.where(yf > 0, cost_pos, cost_neg)
    hinge = np.maximum(0.0, 1.0 - margins)
    return float(0.5 * np.dot(model.w, model.w) + C * np.dot(costs, hinge))


def train_multiclass(X, labels, C: float | None = None,
                     config: TrainConfig = TrainConfig(), *,
                     classes: Sequence | None = None,
                     scaler: ScalerParams | None = None) -> MultiClassSVM:
    """Fit the one-vs-one model on raw (unscaled) feature rows.

    The scaler is fit on X unless a prefit one is supplied, so passing
    training rows only keeps held-out data out of the scaling. Explicit
    `classes` must all be present in the labels.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.shape != (X.shape[0],):
        raise ValueError("dimension mismatch between X and labels")
    present = sorted(set(labels.tolist()))
    if classes is None:
        classes = present
    else:
        classes = sorted(classes)
        missing = [c for c in classes if c not in present]
        if missing:
            raise ValueError(f"classes absent from training data: {missing}")
    if len(classes) < 2:
        raise ValueError("need at least 2 classes")
    if C is None:
        C = config.C

    if config.class_weights is not None:
        weights = dict(config.class_weights)
        for c in classes:
            if c not in weights:
                raise ValueError(f"no class weight for class {c!r}")
    else:
        weights = class_weights(labels.tolist())

    if scaler is None:
        scaler = fit_scaler(X)
    Xs = scale_matrix(scaler, X)

    classifiers = []
    for lo, hi in combinations(classes, 2):
        mask = (labels == lo) | (labels == hi)
        y_pair = np.where(labels[mask] == hi, 1.0, -1.0)
        classifiers.append(train_binary(
            Xs[mask], y_pair, C, cost_neg=weights[lo], cost_pos=weights[hi],
            config=config, class_pair=(lo, hi),
        ))
    return MultiClassSVM(
        classifiers=tuple(classifiers), classes=tuple(classes), scaler=scaler
    )


def predict(model: MultiClassSVM, x, prescaled: bool = False):
    """Majority vote over the pairwise classifiers.

    Vote ties are broken by the largest total signed margin toward each
    tied class, then by the smallest label, so prediction is
    deterministic.
    """
    x = np.asarray(x, dtype=np.float64)
    if not prescaled:
        x = (x - model.scaler.mean) / model.scaler.sd
    votes = {c: 0 for c in model.classes}
    margin = {c: 0.0 for c in model.classes}
    for clf in model.classifiers:
        d = decision_value(clf, x)
        neg, pos = clf.class_pair
        if d > 0:
            votes[pos] += 1
        else:
            votes[neg] += 1
        margin[pos] += d
        margin[neg] -= d
    top = max(votes.values())
    tied = [c for c in model.classes if votes[c] == top]
    if len(tied) > 1:
        best = max(margin[c] for c in tied)
        tied = [c for c in tied if margin[c] == best]
    return min(tied)


def predict_batch(model: MultiClassSVM, X, prescaled: bool = False) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return np.array([predict(model, row, prescaled=prescaled) for row in X])


def save_model(model: MultiClassSVM, path) -> None:
    """Write the model as versioned JSON; floats round-trip exactly."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "classes": list(model.classes),
        "scaler_mean": model.scaler.mean.tolist(),
        "scaler_sd": model.scaler.sd.tolist(),
        "classifiers": [
            {
                "neg": clf.class_pair[0],
                "pos": clf.class_pair[1],
                "b": clf.b,
                "w": clf.w.tolist(),
                "converged": clf.converged,
            }
            for clf in model.classifiers
        ],
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_model(path) -> MultiClassSVM:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FORMAT} file")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {doc.get('version')!r}")
    scaler = ScalerParams(
        mean=np.array(doc["scaler_mean"]), sd=np.array(doc["scaler_sd"])
    )
    classifiers = tuple(
        BinaryLinearSVM(
            w=np.array(rec["w"]), b=float(rec["b"]),
            class_pair=(rec["neg"], rec["pos"]),
            converged=bool(rec.get("converged", True)),
        )
        for rec in doc["classifiers"]
    )
    return MultiClassSVM(
        classifiers=classifiers, classes=tuple(doc["classes"]), scaler=scaler
    )
