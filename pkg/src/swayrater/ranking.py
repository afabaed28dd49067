"""Backward feature elimination and relative-importance aggregation.

Elimination protocol, per outer fold: C is tuned once on the full
feature set and then frozen; starting from all features, every remaining
feature is scored by the inner leave-one-participant-out macro F1 of the
model trained without it, and the feature whose removal scores highest
is dropped. Score ties break toward the lower canonical feature index.
The per-fold rank of a feature is its position from the end of the
elimination order plus one, so the last survivor has rank 1 and the
first feature removed has rank d.

Scaling note: z-scaling parameters are per-column, so scaling the full
training matrix once per inner fold and slicing columns afterwards is
identical to re-fitting the scaler on each candidate subset.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import Dataset, DataError
from .evaluation import (
    DEFAULT_C_GRID,
    EvalConfig,
    _fold_indices,
    confusion_matrix,
    macro_f1,
    tune_C,
)
from .features import (
    DESCRIPTORS,
    FEATURE_NAMES,
    METRICS,
    STEP_OUT_FEATURE,
    feature_label,
)
from .kinematics import ScalerParams, dataset_features, fit_scaler, scale_matrix
from .svm import MultiClassSVM, TrainConfig, _train_binary_gram, class_weights, predict_batch


@dataclass(frozen=True)
class EliminationOrder:
    """Feature names in removal order; the last entry is the survivor."""

    fold_participant: str
    order: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(self.order))
        if len(set(self.order)) != len(self.order):
            raise ValueError("order must be a permutation of the feature set")

    def ranks(self) -> dict:
        d = len(self.order)
        return {name: d - k for k, name in enumerate(self.order)}


@dataclass(frozen=True)
class ImportanceTable:
    """Mean and sd of ranks per feature and per category (lower = more
    important). Categories pool their member features' per-fold ranks;
    the non-step-out count belongs to no category."""

    per_feature: dict
    per_metric: dict
    per_descriptor: dict


@dataclass(frozen=True)
class _FoldData:
    # One inner fold, already scaled, with per-pair row indices cached.
    Xtr: np.ndarray
    Xte: np.ndarray
    yte: np.ndarray
    classes: tuple
    pairs: tuple  # (lo, hi, row_idx, y_pair, cost_lo, cost_hi)


def _identity_scaler(d: int) -> ScalerParams:
    return ScalerParams(mean=np.zeros(d), sd=np.ones(d))


def _prepare_folds(X, labels, pids) -> tuple[list, list]:
    folds = []
    for _, tr, te in _fold_indices(pids):
        ytr = labels[tr]
        if len(set(ytr.tolist())) < 2:
            continue
        scaler = fit_scaler(X[tr])
        Xtr = scale_matrix(scaler, X[tr])
        Xte = scale_matrix(scaler, X[te])
        weights = class_weights(ytr.tolist())
        classes = sorted(set(ytr.tolist()))
        pairs = []
        for a in range(len(classes)):
            for b in range(a + 1, len(classes)):
                lo, hi = classes[a], classes[b]
                idx = np.flatnonzero((ytr == lo) | (ytr == hi))
                y_pair = np.where(ytr[idx] == hi, 1.0, -1.0)
                pairs.append((lo, hi, idx, y_pair, weights[lo], weights[hi]))
        folds.append(_FoldData(
            Xtr=Xtr, Xte=Xte, yte=labels[te], classes=tuple(classes),
            pairs=tuple(pairs),
        ))
    classes_all = sorted(set(labels.tolist()))
    return folds, classes_all


def _score_columns(folds, classes_all, cols, C: float, tcfg: TrainConfig) -> float:
    """Mean inner-fold macro F1 using only the given column subset."""
    scaler = _identity_scaler(len(cols))
    f1s = []
    for fold in folds:
        Xc = np.ascontiguousarray(fold.Xtr[:, cols])
        classifiers = []
        for lo, hi, idx, y_pair, w_lo, w_hi in fold.pairs:
            Xp = np.ascontiguousarray(Xc[idx])
            K = Xp @ Xp.T
            U = np.where(y_pair > 0, C * w_hi, C * w_lo)
            clf, _ = _train_binary_gram(Xp, y_pair, K, U, tcfg, class_pair=(lo, hi))
            classifiers.append(clf)
        model = MultiClassSVM(
            classifiers=tuple(classifiers), classes=fold.classes, scaler=scaler
        )
        preds = predict_batch(model, fold.Xte[:, cols], prescaled=True)
        cm = confusion_matrix(fold.yte.tolist(), preds.tolist(), classes_all)
        f1s.append(macro_f1(cm))
    return float(np.mean(f1s))


def backward_eliminate(train, C: float, config: EvalConfig = EvalConfig(),
                       labels=None, pids=None, feature_names=None,
                       fold_participant: str = "") -> EliminationOrder:
    """Eliminate features one at a time at a fixed C.

    train is a Dataset, or a raw feature matrix together with labels and
    pids. Needs at least 2 participants and 2 classes in the training
    portion.
    """
    if isinstance(train, Dataset):
        table = dataset_features(train, config.zone_threshold_deg)
        X, labels, pids = table.X, table.pt_ratings, table.participant_ids
        if feature_names is None:
            feature_names = FEATURE_NAMES
    else:
        X = np.asarray(train, dtype=np.float64)
        if labels is None or pids is None:
            raise ValueError("labels and pids are required with array input")
        if feature_names is None:
            feature_names = tuple(f"f{i}" for i in range(X.shape[1]))
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    feature_names = tuple(feature_names)
    if len(feature_names) != X.shape[1]:
        raise ValueError("feature_names length must match the feature count")
    if len(set(labels.tolist())) < 2:
        raise DataError("need at least 2 classes to eliminate features")

    folds, classes_all = _prepare_folds(X, labels, pids)
    if len(folds) < 2:
        raise DataError("inner folds impossible: need at least 2 usable participants")

    tcfg = config.train_config(C)
    active = list(range(X.shape[1]))
    removed = []
    while len(active) > 1:
        best_feature = None
        best_score = -np.inf
        for f in active:  # ascending index order makes ties go low
            cols = [c for c in active if c != f]
            score = _score_columns(folds, classes_all, cols, C, tcfg)
            if score > best_score:
                best_score = score
                best_feature = f
        active.remove(best_feature)
        removed.append(feature_names[best_feature])
    removed.append(feature_names[active[0]])
    return EliminationOrder(fold_participant=fold_participant,
                            order=tuple(removed))


def importance_from_orders(orders) -> ImportanceTable:
    """Average per-fold ranks into feature and category importance."""
    orders = list(orders)
    if not orders:
        raise ValueError("need at least one elimination order")
    feature_set = set(orders[0].order)
    for o in orders:
        if set(o.order) != feature_set:
            raise ValueError("orders cover different feature sets")

    per_fold_ranks = [o.ranks() for o in orders]

    def mean_sd(values):
        v = np.asarray(values, dtype=np.float64)
        sd = float(v.std(ddof=1)) if v.size > 1 else 0.0
        return float(v.mean()), sd

    per_feature = {
        name: mean_sd([r[name] for r in per_fold_ranks])
        for name in sorted(feature_set)
    }

    def category(members):
        present = [m for m in members if m in feature_set]
        if not present:
            return None
        pooled = [r[m] for r in per_fold_ranks for m in present]
        return mean_sd(pooled)

    per_metric = {}
    for metric in METRICS:
        entry = category([f"{metric}_{d}" for d in DESCRIPTORS])
        if entry is not None:
            per_metric[metric] = entry
    per_descriptor = {}
    for descriptor in DESCRIPTORS:
        entry = category([f"{m}_{descriptor}" for m in METRICS])
        if entry is not None:
            per_descriptor[descriptor] = entry
    return ImportanceTable(per_feature=per_feature, per_metric=per_metric,
                           per_descriptor=per_descriptor)


def _rank_fold(args):
    held, X, labels, pids, grid, config = args
    pid_arr = np.asarray(pids, dtype=object)
    tr = np.flatnonzero(pid_arr != held)
    tr_pids = [pids[k] for k in tr]
    C, _ = tune_C(X[tr], labels[tr], tr_pids, grid, config, held_out=held)
    return backward_eliminate(
        X[tr], C, config, labels=labels[tr], pids=tr_pids,
        feature_names=FEATURE_NAMES, fold_participant=held,
    ), C


def rank_features(dataset: Dataset, grid=DEFAULT_C_GRID,
                  config: EvalConfig = EvalConfig()):
    """Eliminate per outer fold and aggregate.

    Returns (orders, chosen_Cs, ImportanceTable). Fair warning: this is
    the most expensive pipeline stage, roughly d^2/2 model sweeps per
    fold for d features.
    """
    table = dataset_features(dataset, config.zone_threshold_deg)
    X, labels, pids = table.X, table.pt_ratings, table.participant_ids
    participants = [p for p, _, _ in _fold_indices(pids)]
    if len(participants) < 3:
        raise DataError("nested ranking needs at least 3 participants")
    grid = tuple(sorted(float(c) for c in grid))
    tasks = [(held, X, labels, pids, grid, config) for held in participants]
    jobs = config.jobs if config.audit_hook is None else 1
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_rank_fold, tasks))
    else:
        results = [_rank_fold(t) for t in tasks]
    orders = [r[0] for r in results]
    chosen = [r[1] for r in results]
    return orders, chosen, importance_from_orders(orders)


# ---------------------------------------------------------------------------
# Rendering


def _sorted_entries(table: dict):
    # Ascending mean rank; name as the deterministic tie-break.
    return sorted(table.items(), key=lambda kv: (kv[1][0], str(kv[0])))


def render_importance_tables(importance: ImportanceTable, top_n: int = 10) -> str:
    """Three aligned tables: top features, metrics, descriptors."""
    lines = [f"(a) top {top_n} features by mean rank (1 = most important)"]
    lines.append(f"{'feature':<42} {'mean rank':>9} {'sd':>7}")
    for name, (mean, sd) in _sorted_entries(importance.per_feature)[:top_n]:
        label = feature_label(name) if _is_canonical(name) else str(name)
        lines.append(f"{label:<42} {mean:>9.2f} {sd:>7.2f}")
    lines.append("")
    lines.append("(b) metrics by mean rank of their features")
    lines.append(f"{'metric':<42} {'mean rank':>9} {'sd':>7}")
    for name, (mean, sd) in _sorted_entries(importance.per_metric):
        lines.append(f"{name:<42} {mean:>9.2f} {sd:>7.2f}")
    lines.append("")
    lines.append("(c) descriptors by mean rank of their features")
    lines.append(f"{'descriptor':<42} {'mean rank':>9} {'sd':>7}")
    for name, (mean, sd) in _sorted_entries(importance.per_descriptor):
        lines.append(f"{name:<42} {mean:>9.2f} {sd:>7.2f}")
    lines.append("")
    return "\n".join(lines)


def _is_canonical(name: str) -> bool:
    return name in FEATURE_NAMES or name == STEP_OUT_FEATURE
