"""Canonical feature naming for the 61-dimensional set summary.

Ten per-trial kinematic metrics crossed with six cross-trial statistical
descriptors give 60 features; the count of non-step-out trials is the 61st.
Every array of feature values in this package (scaler parameters, SVM
weights, CSV columns) follows ``FEATURE_NAMES`` order.
"""

from __future__ import annotations

METRICS = (
    "rms_sway",
    "rms_pitch",
    "rms_roll",
    "center_pitch",
    "center_roll",
    "elliptical_area",
    "percentage_zone",
    "trial_length",
    "path_length",
    "rms_velocity",
)

DESCRIPTORS = ("mean", "sd", "min", "max", "median", "trend")

STEP_OUT_FEATURE = "non_step_out_count"

FEATURE_NAMES: tuple[str, ...] = tuple(
    f"{metric}_{descriptor}" for metric in METRICS for descriptor in DESCRIPTORS
) + (STEP_OUT_FEATURE,)

N_FEATURES = len(FEATURE_NAMES)  # 61

FEATURE_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}

METRIC_LABELS = {
    "rms_sway": "RMS of Trunk Sway",
    "rms_pitch": "RMS in Pitch",
    "rms_roll": "RMS in Roll",
    "center_pitch": "Center of Sway in Pitch",
    "center_roll": "Center of Sway in Roll",
    "elliptical_area": "EA",
    "percentage_zone": "PZ",
    "trial_length": "Trial Length",
    "path_length": "Path Length",
    "rms_velocity": "RMS of Velocity",
}

DESCRIPTOR_LABELS = {
    "mean": "Mean",
    "sd": "Standard Deviation",
    "min": "Min",
    "max": "Max",
    "median": "Median",
    "trend": "Trend",
}

STEP_OUT_LABEL = '# of Non-"Step-out" Trials'


def metric_of(feature_name: str) -> str | None:
    """Metric a feature belongs to, or None for the step-out count."""
    if feature_name == STEP_OUT_FEATURE:
        return None
    metric, _, descriptor = feature_name.rpartition("_")
    if metric in METRICS and descriptor in DESCRIPTORS:
        return metric
    raise ValueError(f"unknown feature name: {feature_name!r}")


def descriptor_of(feature_name: str) -> str | None:
    """Descriptor a feature belongs to, or None for the step-out count."""
    if feature_name == STEP_OUT_FEATURE:
        return None
    metric, _, descriptor = feature_name.rpartition("_")
    if metric in METRICS and descriptor in DESCRIPTORS:
        return descriptor
    raise ValueError(f"unknown feature name: {feature_name!r}")


def feature_label(feature_name: str) -> str:
    """Human-readable label used in report tables."""
    if feature_name == STEP_OUT_FEATURE:
        return STEP_OUT_LABEL
    metric = metric_of(feature_name)
    descriptor = descriptor_of(feature_name)
    return f"{DESCRIPTOR_LABELS[descriptor]} of {METRIC_LABELS[metric]}"
