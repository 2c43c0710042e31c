"""SPI-driven multi-category drought impact modeling.

The library computes the Standardized Precipitation Index from monthly
precipitation (zero-inflated Pearson Type III, L-moments), assembles
per-county design matrices against binary impact labels, balances
skewed categories with SMOTE plus random undersampling, trains
gradient-boosted tree classifiers with the second-order logistic
objective, selects hyperparameters by F2/PR-AUC cross validation, and
explains trained models with exact path-dependent TreeSHAP.
"""

from .boost import Ensemble, TrainConfig, train
from .errors import DroughtImpactError, FitError, ValidationError
from .explain import main_effects, shap_values, summarize
from .features import (
    DesignMatrix,
    LabelVector,
    SplitSet,
    build_design_matrix,
    prune_categories,
    stratified_split,
    summarize_impacts,
)
from .ingest import CATEGORIES, load_impacts, load_precip, load_regions
from .resample import ResamplePlan, balance, needs_resampling
from .spi import DistributionFit, SpiSeries, aggregate, compute_spi, fit_month, transform

__version__ = "0.1.0"

__all__ = [
    "CATEGORIES",
    "DesignMatrix",
    "DistributionFit",
    "DroughtImpactError",
    "Ensemble",
    "FitError",
    "LabelVector",
    "ResamplePlan",
    "SpiSeries",
    "SplitSet",
    "TrainConfig",
    "ValidationError",
    "aggregate",
    "balance",
    "build_design_matrix",
    "compute_spi",
    "fit_month",
    "load_impacts",
    "load_precip",
    "load_regions",
    "main_effects",
    "needs_resampling",
    "prune_categories",
    "shap_values",
    "stratified_split",
    "summarize",
    "summarize_impacts",
    "train",
    "transform",
]
