"""Rating balance-exercise performance from trunk-sway recordings.

The package turns pitch/roll sway time series into a 61-entry feature
vector per exercise set, trains class-weighted pairwise linear SVMs on
therapist ratings, and evaluates them with nested
leave-one-participant-out cross-validation. A seeded synthetic
generator plus a deterministic oracle rater stands in for clinical
recordings so the whole pipeline is reproducible end to end.
"""

# Defined before the submodule imports below; evaluation reads it for
# report headers.
__version__ = "0.1.0"

from .core import (
    DataError,
    Dataset,
    ExerciseDescriptor,
    ExerciseSet,
    HeadMotion,
    Stance,
    Surface,
    SwaySample,
    SwayTrial,
    Vision,
    group_to_three,
    load_dataset,
    read_trial_file,
    validate_set,
    validate_trial,
    write_dataset,
    write_trial_file,
)
from .features import (
    DESCRIPTORS,
    FEATURE_INDEX,
    FEATURE_NAMES,
    METRICS,
    N_FEATURES,
    STEP_OUT_FEATURE,
    feature_label,
)
from .kinematics import (
    DEFAULT_ZONE_THRESHOLD_DEG,
    FeatureTable,
    FeatureVector,
    ScalerParams,
    TrialMetrics,
    apply_scaler,
    as_feature_matrix,
    dataset_features,
    fit_scaler,
    linear_trend,
    read_feature_table,
    set_features,
    trial_metrics,
    write_feature_table,
)
from .svm import (
    BinaryLinearSVM,
    MultiClassSVM,
    TrainConfig,
    class_weights,
    decision_value,
    load_model,
    predict,
    predict_batch,
    save_model,
    train_binary,
    train_multiclass,
)
from .evaluation import (
    DEFAULT_C_GRID,
    ClassMetrics,
    ConfusionMatrix,
    CVReport,
    EvalConfig,
    FoldResult,
    PairedTTestResult,
    ZeroVarianceError,
    accuracy,
    confusion_matrix,
    evaluate_dataset,
    evaluate_three_class,
    load_report_document,
    lopo_folds,
    macro_f1,
    paired_t_test,
    per_class_metrics,
    rater_agreement,
    remap_confusion,
    render_document,
    report_from_dict,
    run_nested_lopo,
    student_t_two_tailed_p,
    svm_vs_self_t_test,
    tune_C,
    write_report_document,
)
from .ranking import (
    EliminationOrder,
    ImportanceTable,
    backward_eliminate,
    importance_from_orders,
    rank_features,
    render_importance_tables,
)
from .synthgen import OracleRater, SynthConfig, generate_dataset, oracle_rate
from .solver import backend_name

__all__ = [
    "__version__",
    # core data model
    "DataError", "Dataset", "ExerciseDescriptor", "ExerciseSet",
    "HeadMotion", "Stance", "Surface", "SwaySample", "SwayTrial", "Vision",
    "group_to_three", "load_dataset", "read_trial_file", "validate_set",
    "validate_trial", "write_dataset", "write_trial_file",
    # feature naming
    "DESCRIPTORS", "FEATURE_INDEX", "FEATURE_NAMES", "METRICS", "N_FEATURES",
    "STEP_OUT_FEATURE", "feature_label",
    # kinematics and features
    "DEFAULT_ZONE_THRESHOLD_DEG", "FeatureTable", "FeatureVector",
    "ScalerParams", "TrialMetrics", "apply_scaler", "as_feature_matrix",
    "dataset_features", "fit_scaler", "linear_trend", "read_feature_table",
    "set_features", "trial_metrics", "write_feature_table",
    # classifier
    "BinaryLinearSVM", "MultiClassSVM", "TrainConfig", "class_weights",
    "decision_value", "load_model", "predict", "predict_batch",
    "save_model", "train_binary", "train_multiclass",
    # evaluation
    "DEFAULT_C_GRID", "ClassMetrics", "ConfusionMatrix", "CVReport",
    "EvalConfig", "FoldResult", "PairedTTestResult", "ZeroVarianceError",
    "accuracy", "confusion_matrix", "evaluate_dataset",
    "evaluate_three_class", "load_report_document", "lopo_folds", "macro_f1",
    "paired_t_test", "per_class_metrics", "rater_agreement",
    "remap_confusion", "render_document", "report_from_dict",
    "run_nested_lopo", "student_t_two_tailed_p", "svm_vs_self_t_test",
    "tune_C", "write_report_document",
    # feature ranking
    "EliminationOrder", "ImportanceTable", "backward_eliminate",
    "importance_from_orders", "rank_features", "render_importance_tables",
    # synthetic data
    "OracleRater", "SynthConfig", "generate_dataset", "oracle_rate",
    # solver backend
    "backend_name",
]
