"""Tool-wear condition monitoring: featurize turning-process sensor runs,
train a random-forest classifier, evaluate it, and explain its predictions
with exactly enumerated Shapley values."""

__version__ = "0.1.0"

from .signalprep import (
    FEATURE_NAMES,
    FeatureVector,
    LabeledDataset,
    SensorRun,
    SplitDataset,
    area_under_curve,
    assemble_dataset,
    drop_transition_windows,
    featurize,
    population_variance,
    split,
    window,
)
from .forest import Forest, Hyperparams, Prediction, predict, predict_batch, train
from .metrics import (
    ConfusionMatrix,
    EvaluationReport,
    MetricSet,
    RocCurve,
    accuracy,
    confusion,
    evaluate,
    mcc,
    roc,
    tpr_fpr,
)
from .shapley import (
    CallableValue,
    GlobalImportance,
    InterventionalValue,
    RetrainingValue,
    ShapleyExplanation,
    SubsetModels,
    explain,
    explain_class,
    global_importance,
    shapley_weight,
    shapley_weight_exact,
    train_subset_models,
    value_interventional,
    value_retraining,
)
from .synth import SynthConfig, default_paper_profile, generate
