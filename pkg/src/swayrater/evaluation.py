"""Classification metrics, nested leave-one-participant-out CV, and rater
agreement statistics.

The validation protocol: one outer fold per participant. Within each
outer fold the cost parameter C is tuned by an inner
leave-one-participant-out sweep over the training participants, scoring
each candidate by the mean across inner folds of the macro-averaged F1.
The scaler and the class weights are re-fit inside every fold, inner and
outer, so nothing about the held-out participant ever reaches training.
Ties in the C sweep go to the smallest C.

Per-class precision and recall use the 0-denominator-means-0 convention,
and macro F1 averages only over classes that occur in truth or
prediction. Both the pooled-confusion view and the per-fold mean/sd view
are reported, since they answer different questions.
"""

from __future__ import annotations

import json
import numbers
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from itertools import combinations
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.special import betainc

from . import __version__
from .core import Dataset, DataError, group_to_three
from .kinematics import (
    DEFAULT_ZONE_THRESHOLD_DEG,
    FeatureTable,
    dataset_features,
    fit_scaler,
    scale_matrix,
)
from .svm import (
    MultiClassSVM,
    TrainConfig,
    _rho,
    _train_binary_gram,
    class_weights,
    predict_batch,
    train_multiclass,
)

REPORT_FORMAT = "swayrater-report"
REPORT_VERSION = 1

# Powers of ten spanning the full sweep range.
DEFAULT_C_GRID = (1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3)


class ZeroVarianceError(ValueError):
    """Paired differences with zero variance but non-zero mean; no p-value."""


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with rows = truth and columns = prediction."""

    classes: tuple
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64).copy()
        k = len(self.classes)
        if counts.shape != (k, k):
            raise ValueError("counts must be square over the class list")
        if (counts < 0).any():
            raise ValueError("counts must be non-negative")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "classes", tuple(self.classes))

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class FoldResult:
    held_out_participant: str
    chosen_C: float
    accuracy: float
    macro_f1: float
    confusion: ConfusionMatrix
    n_unconverged: int = 0


@dataclass(frozen=True)
class CVReport:
    folds: tuple[FoldResult, ...]
    pooled_confusion: ConfusionMatrix
    overall_accuracy: float
    overall_macro_f1: float
    per_fold_accuracy_mean_sd: tuple[float, float]
    per_fold_macro_f1_mean_sd: tuple[float, float]
    grid: tuple[float, ...]
    skipped_participants: tuple[str, ...] = ()

    @property
    def n_unconverged(self) -> int:
        return sum(f.n_unconverged for f in self.folds)


@dataclass(frozen=True)
class PairedTTestResult:
    t: float
    df: int
    p: float


@dataclass(frozen=True)
class EvalConfig:
    """Settings for the CV pipeline.

    audit_hook, when set, is called as hook(event, held_out_pid,
    participant_ids) every time training-side data is touched; it forces
    single-process execution because the hook cannot cross process
    boundaries.
    """

    zone_threshold_deg: float = DEFAULT_ZONE_THRESHOLD_DEG
    tolerance: float = 1e-6
    max_iterations: int = 10_000_000
    jobs: int = 1
    audit_hook: Callable | None = None

    def train_config(self, C: float | None = None) -> TrainConfig:
        return TrainConfig(
            C=1.0 if C is None else C,
            tolerance=self.tolerance,
            max_iterations=self.max_iterations,
        )


# ---------------------------------------------------------------------------
# Metric arithmetic


def confusion_matrix(truth, pred, classes) -> ConfusionMatrix:
    truth = list(truth)
    pred = list(pred)
    if len(truth) != len(pred):
        raise ValueError("length mismatch between truth and predictions")
    classes = tuple(classes)
    index = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(truth, pred):
        if t not in index:
            raise ValueError(f"unknown truth label {t!r}")
        if p not in index:
            raise ValueError(f"unknown predicted label {p!r}")
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(classes=classes, counts=counts)


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise ValueError("accuracy of an empty matrix is undefined")
    return float(np.trace(cm.counts)) / cm.total


def per_class_metrics(cm: ConfusionMatrix) -> dict:
    """Precision, recall, F1 and support per class.

    A zero denominator (no true or no predicted examples of the class)
    yields 0 for the affected ratio, and F1 is 0 when precision + recall
    is 0.
    """
    if len(cm.classes) == 0:
        raise ValueError("empty matrix")
    out = {}
    counts = cm.counts
    for i, c in enumerate(cm.classes):
        tp = float(counts[i, i])
        col = float(counts[:, i].sum())
        row = float(counts[i, :].sum())
        precision = tp / col if col > 0 else 0.0
        recall = tp / row if row > 0 else 0.0
        f1 = (2 * precision * recall / (precision + recall)
              if precision + recall > 0 else 0.0)
        out[c] = ClassMetrics(precision=precision, recall=recall, f1=f1,
                              support=int(row))
    return out


def macro_f1(cm: ConfusionMatrix) -> float:
    """Unweighted mean F1 over classes present in truth or prediction."""
    if len(cm.classes) == 0:
        raise ValueError("empty matrix")
    metrics = per_class_metrics(cm)
    counts = cm.counts
    f1s = [
        metrics[c].f1
        for i, c in enumerate(cm.classes)
        if counts[i, :].sum() > 0 or counts[:, i].sum() > 0
    ]
    if not f1s:
        raise ValueError("no class present in truth or prediction")
    return float(np.mean(f1s))


def remap_confusion(cm: ConfusionMatrix, mapping: Callable) -> ConfusionMatrix:
    """Merge confusion cells under a label mapping (e.g. group_to_three)."""
    new_classes = tuple(sorted({mapping(c) for c in cm.classes}))
    index = {c: i for i, c in enumerate(new_classes)}
    counts = np.zeros((len(new_classes), len(new_classes)), dtype=np.int64)
    for i, ci in enumerate(cm.classes):
        for j, cj in enumerate(cm.classes):
            counts[index[mapping(ci)], index[mapping(cj)]] += cm.counts[i, j]
    return ConfusionMatrix(classes=new_classes, counts=counts)


# ---------------------------------------------------------------------------
# Student t statistics


def student_t_two_tailed_p(t: float, df) -> float:
    """Exact two-tailed tail mass of Student's t via the regularized
    incomplete beta function: p = I_{df/(df+t^2)}(df/2, 1/2)."""
    if not isinstance(df, numbers.Real) or df < 1:
        raise ValueError("df must be at least 1")
    t = float(t)
    df = float(df)
    if t == 0.0:
        return 1.0
    x = df / (df + t * t)
    return float(betainc(df / 2.0, 0.5, x))


def paired_t_test(a, b) -> PairedTTestResult:
    """Two-tailed paired t-test of a against b.

    All-zero differences give the degenerate-but-well-defined t = 0,
    p = 1. Identical non-zero differences have zero variance and no
    finite t; that case raises ZeroVarianceError instead of inventing a
    p-value.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("inputs must be 1-D of equal length")
    n = a.size
    if n < 2:
        raise ValueError("need at least 2 pairs")
    d = a - b
    df = n - 1
    if (d == d[0]).all():
        if d[0] == 0.0:
            return PairedTTestResult(t=0.0, df=df, p=1.0)
        raise ZeroVarianceError("constant non-zero differences have no p-value")
    sd = float(d.std(ddof=1))
    t = float(d.mean() / (sd / np.sqrt(n)))
    return PairedTTestResult(t=t, df=df, p=student_t_two_tailed_p(t, df))


# ---------------------------------------------------------------------------
# Folds


def lopo_folds(dataset: Dataset) -> list[tuple[Dataset, Dataset]]:
    """One (train, test) split per participant that has data.

    By construction the held-out participant's sets are exactly the test
    half, so a participant can never appear in its own training fold.
    """
    with_sets = [p for p in dataset.participants if dataset.sets_for(p)]
    if len(with_sets) < 2:
        raise DataError("cross-validation needs at least 2 participants with data")
    folds = []
    for held in with_sets:
        train_sets = tuple(s for s in dataset.sets if s.participant_id != held)
        test_sets = dataset.sets_for(held)
        train = Dataset(
            sets=train_sets,
            participants=tuple(p for p in dataset.participants if p != held),
        )
        test = Dataset(sets=test_sets, participants=(held,))
        folds.append((train, test))
    return folds


def _fold_indices(pids: Sequence[str]):
    """(held_pid, train_idx, test_idx) per distinct pid, in first-seen order."""
    order = []
    seen = set()
    for p in pids:
        if p not in seen:
            seen.add(p)
            order.append(p)
    pid_arr = np.asarray(pids, dtype=object)
    out = []
    for held in order:
        test = np.flatnonzero(pid_arr == held)
        train = np.flatnonzero(pid_arr != held)
        out.append((held, train, test))
    return out


# ---------------------------------------------------------------------------
# Inner sweep


def _audit(config: EvalConfig, event: str, held_out, pids):
    if config.audit_hook is not None:
        config.audit_hook(event, held_out, frozenset(pids))


def _pair_problems(Xs, labels, weights):
    """Per class pair: row indices, +-1 targets, Gram matrix, costs.

    The Gram matrices do not depend on C, so one preparation serves the
    whole C sweep.
    """
    classes = sorted(set(labels.tolist()))
    problems = []
    for lo, hi in combinations(classes, 2):
        idx = np.flatnonzero((labels == lo) | (labels == hi))
        Xp = np.ascontiguousarray(Xs[idx])
        yp = np.where(labels[idx] == hi, 1.0, -1.0)
        K = Xp @ Xp.T
        problems.append((lo, hi, Xp, yp, K, weights[lo], weights[hi]))
    return classes, problems


def _fit_pairs(problems, C: float, config: TrainConfig, warm=None):
    """Solve every cached pair problem at one C.

    warm carries each pair's (C, alpha) from the previous, smaller C of
    the sweep; scaling that solution by the C ratio gives a starting
    point whose bound structure is already close to optimal, which cuts
    the iteration count sharply at the large end of the grid. Returns
    (classifiers, n_unconverged, warm_state).
    """
    classifiers = []
    state = []
    n_unconverged = 0
    for k, (lo, hi, Xp, yp, K, w_lo, w_hi) in enumerate(problems):
        U = np.where(yp > 0, C * w_hi, C * w_lo)
        alpha0 = None
        if warm is not None:
            prev_C, prev_alpha = warm[k]
            alpha0 = prev_alpha * (C / prev_C)
        clf, alpha = _train_binary_gram(
            Xp, yp, K, U, config, class_pair=(lo, hi), alpha0=alpha0
        )
        if not clf.converged:
            n_unconverged += 1
        classifiers.append(clf)
        state.append((C, alpha))
    return classifiers, n_unconverged, state


def tune_C(train, labels=None, pids=None, grid=DEFAULT_C_GRID,
           config: EvalConfig = EvalConfig(), held_out=None):
    """Pick C from the grid by inner leave-one-participant-out macro F1.

    train is the training portion only, either a Dataset or a raw
    feature matrix (then labels and pids are required). Returns
    (best_C, n_unconverged). Ties in the mean inner score go to the
    smallest C.
    """
    if isinstance(train, Dataset):
        table = dataset_features(train, config.zone_threshold_deg)
        X, labels, pids = table.X, table.pt_ratings, table.participant_ids
    else:
        X = train
        if labels is None or pids is None:
            raise ValueError("labels and pids are required with array input")
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    grid = tuple(sorted(float(c) for c in grid))
    if not grid:
        raise ValueError("empty C grid")
    if len(grid) == 1:
        return grid[0], 0
    inner = _fold_indices(pids)
    if len(inner) < 2:
        raise DataError("inner folds impossible: need at least 2 participants")
    classes_all = sorted(set(labels.tolist()))
    pid_arr = np.asarray(pids, dtype=object)

    scores = {C: [] for C in grid}
    n_unconverged = 0
    for pid, tr, te in inner:
        if len(set(labels[tr].tolist())) < 2:
            continue
        _audit(config, "inner_train", held_out, pid_arr[tr])
        _audit(config, "inner_test", held_out, pid_arr[te])
        _audit(config, "inner_scaler_fit", held_out, pid_arr[tr])
        scaler = fit_scaler(X[tr])
        _audit(config, "inner_class_weights", held_out, pid_arr[tr])
        weights = class_weights(labels[tr].tolist())
        Xs = scale_matrix(scaler, X[tr])
        Xte = scale_matrix(scaler, X[te])
        classes, problems = _pair_problems(Xs, labels[tr], weights)
        warm = None
        for C in grid:
            classifiers, bad, warm = _fit_pairs(
                problems, C, config.train_config(C), warm
            )
            n_unconverged += bad
            model = MultiClassSVM(
                classifiers=tuple(classifiers), classes=tuple(classes),
                scaler=scaler,
            )
            preds = predict_batch(model, X[te])
            cm = confusion_matrix(labels[te].tolist(), preds.tolist(), classes_all)
            scores[C].append(macro_f1(cm))
    if not scores[grid[0]]:
        raise DataError("inner folds impossible: every fold lacked a second class")

    best_C = None
    best_score = -np.inf
    for C in grid:
        score = float(np.mean(scores[C]))
        if score > best_score:
            best_score = score
            best_C = C
    return best_C, n_unconverged


# ---------------------------------------------------------------------------
# Outer loop


def _mean_sd(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=np.float64)
    sd = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return float(v.mean()), sd


def _outer_fold(args):
    (held, X, labels, pids, grid, config, classes_all) = args
    indices = dict((p, (tr, te)) for p, tr, te in _fold_indices(pids))
    tr, te = indices[held]
    pid_arr = np.asarray(pids, dtype=object)
    if len(set(labels[tr].tolist())) < 2:
        return ("skipped", held)

    chosen_C, bad_inner = tune_C(
        X[tr], labels[tr], [pids[k] for k in tr], grid, config, held_out=held
    )
    _audit(config, "outer_scaler_fit", held, pid_arr[tr])
    scaler = fit_scaler(X[tr])
    _audit(config, "outer_class_weights", held, pid_arr[tr])
    _audit(config, "outer_train", held, pid_arr[tr])
    model = train_multiclass(
        X[tr], labels[tr], chosen_C, config.train_config(chosen_C), scaler=scaler
    )
    preds = predict_batch(model, X[te])
    cm = confusion_matrix(labels[te].tolist(), preds.tolist(), classes_all)
    bad = bad_inner + sum(1 for c in model.classifiers if not c.converged)
    return FoldResult(
        held_out_participant=held, chosen_C=chosen_C,
        accuracy=accuracy(cm), macro_f1=macro_f1(cm), confusion=cm,
        n_unconverged=bad,
    )


def _aggregate(fold_results, classes_all, grid) -> CVReport:
    folds = [f for f in fold_results if isinstance(f, FoldResult)]
    skipped = tuple(f[1] for f in fold_results if not isinstance(f, FoldResult))
    if not folds:
        raise DataError("every fold was skipped; cannot evaluate")
    pooled = ConfusionMatrix(
        classes=tuple(classes_all),
        counts=np.sum([f.confusion.counts for f in folds], axis=0),
    )
    return CVReport(
        folds=tuple(folds),
        pooled_confusion=pooled,
        overall_accuracy=accuracy(pooled),
        overall_macro_f1=macro_f1(pooled),
        per_fold_accuracy_mean_sd=_mean_sd([f.accuracy for f in folds]),
        per_fold_macro_f1_mean_sd=_mean_sd([f.macro_f1 for f in folds]),
        grid=tuple(grid),
        skipped_participants=skipped,
    )


def _run_nested(X, labels, pids, grid, config: EvalConfig) -> CVReport:
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    grid = tuple(sorted(float(c) for c in grid))
    participants = [p for p, _, _ in _fold_indices(pids)]
    if len(participants) < 3:
        raise DataError("nested validation needs at least 3 participants")
    classes_all = sorted(set(labels.tolist()))
    tasks = [
        (held, X, labels, tuple(pids), grid, config, classes_all)
        for held in participants
    ]
    jobs = config.jobs
    if config.audit_hook is not None:
        jobs = 1  # hooks cannot cross process boundaries
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_outer_fold, tasks))
    else:
        results = [_outer_fold(t) for t in tasks]
    return _aggregate(results, classes_all, grid)


def run_nested_lopo(dataset: Dataset, grid=DEFAULT_C_GRID,
                    config: EvalConfig = EvalConfig()) -> CVReport:
    """Nested leave-one-participant-out evaluation of the 5-level task."""
    table = dataset_features(dataset, config.zone_threshold_deg)
    return _run_nested(table.X, table.pt_ratings, table.participant_ids,
                       grid, config)


def evaluate_three_class(report_or_dataset, mode: str = "retrain",
                         grid=DEFAULT_C_GRID,
                         config: EvalConfig = EvalConfig()) -> CVReport:
    """Three-level evaluation, grouping ratings {1,2}, {3,4}, {5}.

    mode "retrain" reruns the nested validation on grouped labels (a
    genuinely separate task); mode "map-predictions" collapses an
    existing or freshly computed 5-level report's confusions, which can
    only merge errors, never create them.
    """
    if mode not in ("retrain", "map-predictions"):
        raise ValueError(f"unknown mode {mode!r}")
    if isinstance(report_or_dataset, CVReport):
        if mode != "map-predictions":
            raise ValueError("a stored report can only be remapped, not retrained")
        return _map_report(report_or_dataset)
    dataset = report_or_dataset
    if mode == "map-predictions":
        return _map_report(run_nested_lopo(dataset, grid, config))
    table = dataset_features(dataset, config.zone_threshold_deg)
    grouped = np.array([group_to_three(int(r)) for r in table.pt_ratings])
    return _run_nested(table.X, grouped, table.participant_ids, grid, config)


def _map_report(report: CVReport) -> CVReport:
    folds = []
    for f in report.folds:
        cm3 = remap_confusion(f.confusion, group_to_three)
        folds.append(replace(
            f, confusion=cm3, accuracy=accuracy(cm3), macro_f1=macro_f1(cm3)
        ))
    folds = tuple(folds)
    pooled = remap_confusion(report.pooled_confusion, group_to_three)
    return CVReport(
        folds=folds,
        pooled_confusion=pooled,
        overall_accuracy=accuracy(pooled),
        overall_macro_f1=macro_f1(pooled),
        per_fold_accuracy_mean_sd=_mean_sd([f.accuracy for f in folds]),
        per_fold_macro_f1_mean_sd=_mean_sd([f.macro_f1 for f in folds]),
        grid=report.grid,
        skipped_participants=report.skipped_participants,
    )


# ---------------------------------------------------------------------------
# Rater agreement and the full evaluation document


def rater_agreement(table: FeatureTable, three_class: bool = False) -> ConfusionMatrix:
    """Participant self-ratings against therapist ratings (read-only)."""
    truth = [int(r) for r in table.pt_ratings]
    pred = [int(r) for r in table.self_ratings]
    if three_class:
        truth = [group_to_three(r) for r in truth]
        pred = [group_to_three(r) for r in pred]
    classes = sorted(set(truth) | set(pred))
    return confusion_matrix(truth, pred, classes)


def _per_fold_self_accuracy(table: FeatureTable, fold_pids, three_class=False):
    pid_arr = np.asarray(table.participant_ids, dtype=object)
    pt = [int(r) for r in table.pt_ratings]
    sr = [int(r) for r in table.self_ratings]
    if three_class:
        pt = [group_to_three(r) for r in pt]
        sr = [group_to_three(r) for r in sr]
    pt = np.asarray(pt)
    sr = np.asarray(sr)
    out = []
    for pid in fold_pids:
        idx = np.flatnonzero(pid_arr == pid)
        out.append(float((pt[idx] == sr[idx]).mean()))
    return out


def svm_vs_self_t_test(report: CVReport, table: FeatureTable,
                       three_class: bool = False):
    """Paired t-test of per-fold SVM accuracy against self-rating accuracy.

    Returns a PairedTTestResult, or a dict describing the degenerate
    zero-variance outcome when no p-value exists.
    """
    fold_pids = [f.held_out_participant for f in report.folds]
    svm_acc = [f.accuracy for f in report.folds]
    self_acc = _per_fold_self_accuracy(table, fold_pids, three_class)
    try:
        return paired_t_test(svm_acc, self_acc)
    except ZeroVarianceError as exc:
        gap = float(np.mean(np.asarray(svm_acc) - np.asarray(self_acc)))
        return {"degenerate": True, "reason": str(exc), "mean_gap": gap}


def evaluate_dataset(dataset: Dataset, grid=DEFAULT_C_GRID,
                     config: EvalConfig = EvalConfig(),
                     three_class_mode: str | None = None) -> dict:
    """Run the full evaluation and return the report document (JSON-able)."""
    table = dataset_features(dataset, config.zone_threshold_deg)
    report = _run_nested(table.X, table.pt_ratings, table.participant_ids,
                         grid, config)
    doc = {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "tool_version": __version__,
        "zone_threshold_deg": config.zone_threshold_deg,
        "grid": [float(c) for c in sorted(grid)],
        "five_class": _report_to_dict(report),
        "agreement": _cm_to_dict(rater_agreement(table)),
        "t_test_svm_vs_self": _ttest_to_dict(svm_vs_self_t_test(report, table)),
    }
    if three_class_mode is not None:
        if three_class_mode == "retrain":
            report3 = evaluate_three_class(dataset, "retrain", grid, config)
        else:
            report3 = _map_report(report)
        doc["three_class"] = _report_to_dict(report3)
        doc["three_class_mode"] = three_class_mode
        doc["agreement_three_class"] = _cm_to_dict(
            rater_agreement(table, three_class=True)
        )
        doc["t_test_svm_vs_self_three_class"] = _ttest_to_dict(
            svm_vs_self_t_test(report3, table, three_class=True)
        )
    return doc


# ---------------------------------------------------------------------------
# Serialization


def _cm_to_dict(cm: ConfusionMatrix) -> dict:
    return {"classes": list(cm.classes), "counts": cm.counts.tolist()}


def _cm_from_dict(doc: dict) -> ConfusionMatrix:
    return ConfusionMatrix(classes=tuple(doc["classes"]),
                           counts=np.array(doc["counts"], dtype=np.int64))


def _ttest_to_dict(result) -> dict:
    if isinstance(result, PairedTTestResult):
        return {"t": result.t, "df": result.df, "p": result.p}
    return dict(result)


def _report_to_dict(report: CVReport) -> dict:
    return {
        "folds": [
            {
                "held_out_participant": f.held_out_participant,
                "chosen_C": f.chosen_C,
                "accuracy": f.accuracy,
                "macro_f1": f.macro_f1,
                "confusion": _cm_to_dict(f.confusion),
                "n_unconverged": f.n_unconverged,
            }
            for f in report.folds
        ],
        "pooled_confusion": _cm_to_dict(report.pooled_confusion),
        "overall_accuracy": report.overall_accuracy,
        "overall_macro_f1": report.overall_macro_f1,
        "per_fold_accuracy_mean_sd": list(report.per_fold_accuracy_mean_sd),
        "per_fold_macro_f1_mean_sd": list(report.per_fold_macro_f1_mean_sd),
        "grid": list(report.grid),
        "skipped_participants": list(report.skipped_participants),
    }


def report_from_dict(doc: dict) -> CVReport:
    folds = tuple(
        FoldResult(
            held_out_participant=f["held_out_participant"],
            chosen_C=float(f["chosen_C"]),
            accuracy=float(f["accuracy"]),
            macro_f1=float(f["macro_f1"]),
            confusion=_cm_from_dict(f["confusion"]),
            n_unconverged=int(f.get("n_unconverged", 0)),
        )
        for f in doc["folds"]
    )
    return CVReport(
        folds=folds,
        pooled_confusion=_cm_from_dict(doc["pooled_confusion"]),
        overall_accuracy=float(doc["overall_accuracy"]),
        overall_macro_f1=float(doc["overall_macro_f1"]),
        per_fold_accuracy_mean_sd=tuple(doc["per_fold_accuracy_mean_sd"]),
        per_fold_macro_f1_mean_sd=tuple(doc["per_fold_macro_f1_mean_sd"]),
        grid=tuple(doc["grid"]),
        skipped_participants=tuple(doc.get("skipped_participants", ())),
    )


def write_report_document(doc: dict, json_path, text_path=None) -> None:
    json_path = Path(json_path)
    json_path.parent.mkdir(parents=True, exist_ok=True)
    with json_path.open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    if text_path is not None:
        Path(text_path).write_text(render_document(doc), encoding="utf-8")


def load_report_document(path) -> dict:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != REPORT_FORMAT:
        raise DataError(f"{path}: not a {REPORT_FORMAT} file")
    if doc.get("version") != REPORT_VERSION:
        raise DataError(f"{path}: unsupported report version {doc.get('version')!r}")
    return doc


# ---------------------------------------------------------------------------
# Plain-text rendering


def render_confusion(cm_doc: dict, title: str) -> str:
    """Aligned counts table with recall, precision and F1 margins."""
    cm = _cm_from_dict(cm_doc)
    metrics = per_class_metrics(cm)
    classes = list(cm.classes)
    width = max(6, max(len(str(c)) for c in classes) + 2)

    def cell(x):
        return f"{x:>{width}}"

    lines = [title, "rows: assessed level, columns: predicted level", ""]
    header = cell("") + "".join(cell(c) for c in classes) + f"{'recall':>{width + 2}}"
    lines.append(header)
    for i, c in enumerate(classes):
        row = cell(c)
        row += "".join(cell(int(n)) for n in cm.counts[i])
        row += f"{metrics[c].recall:>{width + 2}.2f}"
        lines.append(row)
    lines.append(
        cell("prec") + "".join(cell(f"{metrics[c].precision:.2f}") for c in classes)
    )
    lines.append(
        cell("F1") + "".join(cell(f"{metrics[c].f1:.2f}") for c in classes)
    )
    lines.append(
        f"accuracy: {100.0 * accuracy(cm):.1f}%"
        f" ({int(np.trace(cm.counts))}/{cm.total})"
    )
    return "\n".join(lines)


def _render_cv_section(doc: dict, name: str) -> list[str]:
    lines = [f"== {name} =="]
    acc_mean, acc_sd = doc["per_fold_accuracy_mean_sd"]
    f1_mean, f1_sd = doc["per_fold_macro_f1_mean_sd"]
    lines.append(f"overall accuracy (pooled): {100.0 * doc['overall_accuracy']:.1f}%")
    lines.append(f"overall macro F1 (pooled): {doc['overall_macro_f1']:.3f}")
    lines.append(
        f"per-fold accuracy: {100.0 * acc_mean:.1f}% +- {100.0 * acc_sd:.1f}"
    )
    lines.append(f"per-fold macro F1: {f1_mean:.3f} +- {f1_sd:.3f}")
    if doc.get("skipped_participants"):
        lines.append("skipped folds: " + ", ".join(doc["skipped_participants"]))
    lines.append("")
    lines.append(f"{'participant':>14} {'chosen C':>10} {'accuracy':>9} {'macro F1':>9}")
    for f in doc["folds"]:
        lines.append(
            f"{f['held_out_participant']:>14} {f['chosen_C']:>10g}"
            f" {f['accuracy']:>9.3f} {f['macro_f1']:>9.3f}"
        )
    lines.append("")
    lines.append(render_confusion(doc["pooled_confusion"], "pooled confusion"))
    return lines


def _render_ttest(t_doc: dict, label: str) -> list[str]:
    if t_doc.get("degenerate"):
        return [
            f"{label}: degenerate (zero-variance differences,"
            f" mean gap {t_doc['mean_gap']:+.3f})"
        ]
    return [
        f"{label}: t = {t_doc['t']:.3f}, df = {t_doc['df']}, p = {t_doc['p']:.3g}"
    ]


def render_document(doc: dict) -> str:
    """Human-readable rendering of a stored report document."""
    lines = [
        f"swayrater evaluation report (tool {doc.get('tool_version', '?')})",
        f"C grid: {', '.join(f'{c:g}' for c in doc['grid'])}",
        f"zone threshold: {doc.get('zone_threshold_deg', 1.0):g} deg",
        "",
    ]
    lines.extend(_render_cv_section(doc["five_class"], "five-level task"))
    lines.append("")
    lines.append(render_confusion(
        doc["agreement"], "participant self-ratings vs therapist"
    ))
    lines.append("")
    lines.extend(_render_ttest(
        doc["t_test_svm_vs_self"], "per-fold accuracy, SVM vs self-rating"
    ))
    if "three_class" in doc:
        lines.append("")
        lines.extend(_render_cv_section(
            doc["three_class"],
            f"three-level task ({doc.get('three_class_mode', 'retrain')})",
        ))
        lines.append("")
        lines.append(render_confusion(
            doc["agreement_three_class"],
            "participant self-ratings vs therapist (grouped)",
        ))
        lines.append("")
        lines.extend(_render_ttest(
            doc["t_test_svm_vs_self_three_class"],
            "per-fold accuracy, SVM vs self-rating (grouped)",
        ))
    lines.append("")
    return "\n".join(lines)
