from .kmeans import ClusterModel, ElbowResult, elbow, kmeans_fit, suggest_k
from .regression import (
    Design,
    FitResult,
    RegressionSpec,
    build_design,
    fit,
    logit_fit,
    ols_fit,
)

__all__ = [
    "ClusterModel", "ElbowResult", "elbow", "kmeans_fit", "suggest_k",
    "Design", "FitResult", "RegressionSpec", "build_design", "fit", "logit_fit", "ols_fit",
]
