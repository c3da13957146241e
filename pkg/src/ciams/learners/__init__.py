"""From-scratch classifiers for the six model classes plus boosted regression."""

from .boosting import GBTRegressor, fit_gbt, fit_gbt_regressor, predict_regressor
from .linear import LogisticElasticNet, fit_logistic_elastic
from .neighbors import KNNClassifier, imbalance_k
from .svm import SVC, rbf_gamma, rbf_kernel, smo_fit
from .trees import Binner, DecisionTreeClassifier, RandomForestClassifier, Tree, grow_tree
from .tune import (
    LR_MIX_GRID,
    LR_STRENGTH_GRID,
    MODEL_CLASSES,
    SVM_C_GRID,
    XGB_DEPTH_GRID,
    TunedClassifier,
    fit_tuned,
    predict,
    stratified_folds,
)

__all__ = [
    "Binner",
    "DecisionTreeClassifier",
    "GBTRegressor",
    "KNNClassifier",
    "LR_MIX_GRID",
    "LR_STRENGTH_GRID",
    "LogisticElasticNet",
    "MODEL_CLASSES",
    "RandomForestClassifier",
    "SVC",
    "SVM_C_GRID",
    "Tree",
    "TunedClassifier",
    "XGB_DEPTH_GRID",
    "fit_gbt",
    "fit_gbt_regressor",
    "fit_logistic_elastic",
    "fit_tuned",
    "grow_tree",
    "imbalance_k",
    "predict",
    "predict_regressor",
    "rbf_gamma",
    "rbf_kernel",
    "smo_fit",
    "stratified_folds",
]
