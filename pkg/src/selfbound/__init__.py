"""Self-bounding majority votes: learn tree-ensemble weights by minimizing a risk certificate."""

from .bounds import BoundCertificate, ComplexityTerms, certify_all
from .data import Dataset, SplitSpec, load_csv
from .forest import PredictionMatrix, predict_matrix, train_forest
from .optim import TrainConfig, learn
from .stats import EmpiricalMoments, Posterior, moments, mv_risk

__all__ = [
    "BoundCertificate", "ComplexityTerms", "certify_all",
    "Dataset", "SplitSpec", "load_csv",
    "PredictionMatrix", "predict_matrix", "train_forest",
    "TrainConfig", "learn",
    "EmpiricalMoments", "Posterior", "moments", "mv_risk",
]
