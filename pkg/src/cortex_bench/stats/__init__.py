"""Statistics shared by the benchmarks."""
from .consistency import internal_consistency, spearman_brown
from .correlation import columnwise_pearson, median, pearson_r, spearman_rho
from .cv import CrossValPlan
from .logistic import LogisticClassifier, logistic_fit, logistic_predict_proba
from .pca import DegenerateDataError, PCAModel, pca_fit, pca_inverse_transform, pca_transform
from .pls import ConvergenceError, PLSModel, RankError, pls_fit, pls_predict
from .probit import dprime, z_inverse

__all__ = [
    "internal_consistency", "spearman_brown", "columnwise_pearson", "median", "pearson_r", "spearman_rho",
    "CrossValPlan", "LogisticClassifier", "logistic_fit", "logistic_predict_proba", "DegenerateDataError",
    "PCAModel", "pca_fit", "pca_inverse_transform", "pca_transform", "ConvergenceError", "PLSModel",
    "RankError", "pls_fit", "pls_predict", "dprime", "z_inverse",
]
