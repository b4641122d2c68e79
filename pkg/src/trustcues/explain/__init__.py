"""Exact Shapley attributions for the forest and summary rankings."""
from .shap import (
    INTERVENTIONAL,
    PATH_DEPENDENT,
    ShapAttribution,
    TreeExplainer,
    brute_force_shapley,
    tree_shap,
)
from .summary import FeatureImportance, ShapSummary, plot_data, summarize

__all__ = [
    "INTERVENTIONAL", "PATH_DEPENDENT", "FeatureImportance", "ShapAttribution",
    "ShapSummary", "TreeExplainer", "brute_force_shapley", "plot_data",
    "summarize", "tree_shap",
]
