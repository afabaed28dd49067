"""Per-trial kinematic metrics and the 61-dimensional set feature vector.

Ten metrics are computed per trial. Across the trials of a set, each
metric is summarized by six descriptors (mean, sample sd, min, max,
median, trend sign), and the count of non-step-out trials is appended,
giving 10 x 6 + 1 = 61 features in ``features.FEATURE_NAMES`` order.

Conventions, chosen once and used everywhere:
  - RMS metrics are dispersions about the per-trial mean; the mean itself
    is reported as the center of sway.
  - The combined sway RMS is the root of the summed per-axis mean squares,
    so rms_sway^2 = rms_pitch^2 + rms_roll^2 holds by construction.
  - Elliptical area is the 95% confidence ellipse of the pitch/roll
    scatter, pi * 5.991 * sqrt(det(covariance)).
  - Percentage zone is the time-weighted share of the trial during which
    the resultant tilt magnitude sqrt(pitch^2 + roll^2), measured on the
    raw angles, exceeds the zone threshold.
  - Standard deviations use the n-1 denominator, with 0 for n = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import DataError, ExerciseSet, SwayTrial
from .features import FEATURE_NAMES, FEATURE_INDEX, METRICS, N_FEATURES

# 95% quantile of the chi-squared distribution with 2 degrees of freedom.
EA_CONFIDENCE_SCALE = 5.991

# Least-squares slopes with magnitude under this are reported as flat.
# Applied to raw metric values, so it is unit-dependent by design.
TREND_SLOPE_THRESHOLD = 0.005

DEFAULT_ZONE_THRESHOLD_DEG = 1.0


@dataclass(frozen=True)
class TrialMetrics:
    """The ten kinematic metrics of a single trial."""

    rms_sway: float
    rms_pitch: float
    rms_roll: float
    center_pitch: float
    center_roll: float
    elliptical_area: float
    percentage_zone: float
    trial_length: float
    path_length: float
    rms_velocity: float

    def as_array(self) -> np.ndarray:
        """Values in METRICS order."""
        return np.array([getattr(self, name) for name in METRICS])


@dataclass(frozen=True)
class FeatureVector:
    """61 set-level features, indexable by feature name."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != (N_FEATURES,):
            raise ValueError(f"expected {N_FEATURES} features, got shape {arr.shape}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __getitem__(self, name: str) -> float:
        return float(self.values[FEATURE_INDEX[name]])


@dataclass(frozen=True)
class ScalerParams:
    """Per-feature z-scaling parameters (fit on training data only)."""

    mean: np.ndarray
    sd: np.ndarray

    def __post_init__(self):
        for name in ("mean", "sd"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.mean.shape != self.sd.shape or self.mean.ndim != 1:
            raise ValueError("mean and sd must be 1-D arrays of equal length")
        if not (self.sd > 0).all():
            raise ValueError("sd entries must be strictly positive")


def _finite_differences(values: np.ndarray, t: np.ndarray) -> np.ndarray:
    # Plain difference quotients: central in the interior, one-sided at the
    # ends. Handles irregular spacing; np.gradient fits a quadratic on
    # non-uniform grids, which is a different estimator.
    d = np.empty_like(values)
    d[1:-1] = (values[2:] - values[:-2]) / (t[2:] - t[:-2])
    d[0] = (values[1] - values[0]) / (t[1] - t[0])
    d[-1] = (values[-1] - values[-2]) / (t[-1] - t[-2])
    return d


def _sample_weights(t: np.ndarray) -> np.ndarray:
    # Each sample owns half the gap to each neighbour; the weights sum to
    # the trial length and are symmetric under time reversal.
    w = np.empty_like(t)
    w[1:-1] = (t[2:] - t[:-2]) / 2.0
    w[0] = (t[1] - t[0]) / 2.0
    w[-1] = (t[-1] - t[-2]) / 2.0
    return w


def trial_metrics(trial: SwayTrial,
                  zone_threshold_deg: float = DEFAULT_ZONE_THRESHOLD_DEG) -> TrialMetrics:
    """Compute the ten metrics for one trial.

    Requires at least 2 samples and strictly increasing timestamps.
    """
    if zone_threshold_deg <= 0:
        raise ValueError("zone_threshold_deg must be positive")
    t, pitch, roll = trial.t, trial.pitch, trial.roll
    n = len(t)
    if n < 2:
        raise ValueError("fewer than 2 samples")
    if not (np.diff(t) > 0).all():
        raise ValueError("non-monotone time")

    center_pitch = float(pitch.mean())
    center_roll = float(roll.mean())
    p = pitch - center_pitch
    r = roll - center_roll
    rms_pitch = float(np.sqrt(np.mean(p * p)))
    rms_roll = float(np.sqrt(np.mean(r * r)))
    rms_sway = float(np.sqrt(np.mean(p * p + r * r)))

    cov = np.cov(pitch, roll, ddof=1)
    det = float(cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0])
    # Roundoff can push a degenerate determinant a hair below zero.
    elliptical_area = float(np.pi * EA_CONFIDENCE_SCALE * np.sqrt(max(det, 0.0)))

    magnitude = np.hypot(pitch, roll)
    weights = _sample_weights(t)
    outside = float(weights[magnitude > zone_threshold_deg].sum())
    percentage_zone = 100.0 * outside / float(weights.sum())

    trial_length = float(t[-1] - t[0])
    path_length = float(np.hypot(np.diff(pitch), np.diff(roll)).sum())

    vp = _finite_differences(pitch, t)
    vr = _finite_differences(roll, t)
    rms_velocity = float(np.sqrt(np.mean(vp * vp + vr * vr)))

    return TrialMetrics(
        rms_sway=rms_sway, rms_pitch=rms_pitch, rms_roll=rms_roll,
        center_pitch=center_pitch, center_roll=center_roll,
        elliptical_area=elliptical_area, percentage_zone=percentage_zone,
        trial_length=trial_length, path_length=path_length,
        rms_velocity=rms_velocity,
    )


def linear_trend(values: Sequence[float]) -> int:
    """Sign of the least-squares slope of values against 1..n.

    Returns 0 when fewer than 2 values or when the slope magnitude is
    below TREND_SLOPE_THRESHOLD.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("empty input")
    if v.size < 2:
        return 0
    x = np.arange(1.0, v.size + 1.0)
    xc = x - x.mean()
    slope = float(np.dot(xc, v - v.mean()) / np.dot(xc, xc))
    if abs(slope) < TREND_SLOPE_THRESHOLD:
        return 0
    return 1 if slope > 0 else -1


def _descriptors(values: list[float]) -> list[float]:
    v = np.asarray(values, dtype=np.float64)
    sd = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return [
        float(v.mean()),
        sd,
        float(v.min()),
        float(v.max()),
        float(np.median(v)),
        float(linear_trend(v)),
    ]


def set_features(exercise_set: ExerciseSet,
                 zone_threshold_deg: float = DEFAULT_ZONE_THRESHOLD_DEG) -> FeatureVector:
    """Assemble the 61-feature vector for one exercise set.

    Trials with fewer than 2 samples cannot support rate-of-change or
    dispersion metrics; they contribute only their duration to the
    trial_length descriptor pool. At least one full trial is required.
    """
    usable = [tr for tr in exercise_set.trials if tr.n_samples >= 2]
    if not usable:
        raise ValueError("no usable trial")
    per_metric: dict[str, list[float]] = {name: [] for name in METRICS}
    for trial in exercise_set.trials:
        if trial.n_samples >= 2:
            m = trial_metrics(trial, zone_threshold_deg)
            for name in METRICS:
                per_metric[name].append(getattr(m, name))
        elif trial.n_samples == 1:
            per_metric["trial_length"].append(trial.duration)

    out = []
    for name in METRICS:
        out.extend(_descriptors(per_metric[name]))
    out.append(float(sum(1 for tr in exercise_set.trials if not tr.step_out)))
    return FeatureVector(np.array(out))


def fit_scaler(feature_rows) -> ScalerParams:
    """Per-feature mean and sample sd over the given rows.

    Accepts a sequence of FeatureVector or a 2-D array. Features with
    sd below 1e-12 get sd = 1 so scaling degrades to mean removal.
    """
    X = as_feature_matrix(feature_rows)
    if X.shape[0] < 2:
        raise ValueError("need at least 2 rows to fit a scaler")
    mean = X.mean(axis=0)
    sd = X.std(axis=0, ddof=1)
    sd = np.where(sd < 1e-12, 1.0, sd)
    return ScalerParams(mean=mean, sd=sd)


def apply_scaler(params: ScalerParams, row: FeatureVector) -> FeatureVector:
    if params.mean.shape != row.values.shape:
        raise ValueError("scaler/feature dimension mismatch")
    return FeatureVector((row.values - params.mean) / params.sd)


def scale_matrix(params: ScalerParams, X: np.ndarray) -> np.ndarray:
    """Vectorized apply_scaler for a 2-D feature matrix."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.mean.shape[0]:
        raise ValueError("scaler/feature dimension mismatch")
    return (X - params.mean) / params.sd


def as_feature_matrix(rows) -> np.ndarray:
    """Stack FeatureVector rows (or pass a 2-D array through) as float64."""
    if isinstance(rows, np.ndarray):
        X = np.asarray(rows, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("expected a 2-D feature matrix")
        return X
    return np.array([
        row.values if isinstance(row, FeatureVector) else np.asarray(row, dtype=np.float64)
        for row in rows
    ])


@dataclass(frozen=True)
class FeatureTable:
    """Feature matrix for a whole dataset plus the per-set labels."""

    X: np.ndarray                     # (n_sets, 61) raw, unscaled
    participant_ids: tuple[str, ...]
    session_indices: tuple[int, ...]
    pt_ratings: np.ndarray            # int64
    self_ratings: np.ndarray          # int64

    def __len__(self) -> int:
        return self.X.shape[0]


def dataset_features(dataset, zone_threshold_deg: float = DEFAULT_ZONE_THRESHOLD_DEG) -> FeatureTable:
    rows = []
    pids = []
    sessions = []
    pt = []
    selfr = []
    for s in dataset.sets:
        rows.append(set_features(s, zone_threshold_deg).values)
        pids.append(s.participant_id)
        sessions.append(s.session_index)
        pt.append(s.pt_rating)
        selfr.append(s.self_rating)
    return FeatureTable(
        X=np.array(rows), participant_ids=tuple(pids),
        session_indices=tuple(sessions),
        pt_ratings=np.array(pt, dtype=np.int64),
        self_ratings=np.array(selfr, dtype=np.int64),
    )


def write_feature_table(table: FeatureTable, path) -> None:
    """CSV export: id/label columns then the 61 features in canonical order.

    Floats are written in shortest exact form, so re-running the export on
    the same dataset is byte-identical.
    """
    import csv
    from pathlib import Path

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["participant_id", "session_index", "pt_rating", "self_rating"]
            + list(FEATURE_NAMES)
        )
        for i in range(len(table)):
            writer.writerow(
                [
                    table.participant_ids[i],
                    table.session_indices[i],
                    int(table.pt_ratings[i]),
                    int(table.self_ratings[i]),
                ]
                + [repr(float(x)) for x in table.X[i]]
            )


def read_feature_table(path) -> FeatureTable:
    """Inverse of write_feature_table; exact because floats round-trip."""
    import csv
    from pathlib import Path

    path = Path(path)
    expected = ["participant_id", "session_index", "pt_rating", "self_rating"] + list(FEATURE_NAMES)
    rows, pids, sessions, pt, selfr = [], [], [], [], []
    with path.open("r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty feature table")
        if header != expected:
            raise DataError(f"{path}: unexpected feature table header")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(expected):
                raise DataError(f"{path}:{lineno}: malformed row")
            try:
                pids.append(row[0])
                sessions.append(int(row[1]))
                pt.append(int(row[2]))
                selfr.append(int(row[3]))
                rows.append([float(x) for x in row[4:]])
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed row")
    return FeatureTable(
        X=np.array(rows, dtype=np.float64).reshape(len(rows), N_FEATURES),
        participant_ids=tuple(pids), session_indices=tuple(sessions),
        pt_ratings=np.array(pt, dtype=np.int64),
        self_ratings=np.array(selfr, dtype=np.int64),
    )
