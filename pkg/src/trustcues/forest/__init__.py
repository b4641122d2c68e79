"""Random forest classifier grown from scratch, plus the evaluation protocol."""
from .estimator import RandomForest, fit_forest, resolve_max_features
from .protocol import EvalReport, evaluate_protocol, mean_ci, stratified_split
from .tree import Tree, gini

__all__ = [
    "RandomForest", "Tree", "EvalReport", "evaluate_protocol", "fit_forest",
    "gini", "mean_ci", "resolve_max_features", "stratified_split",
]
