"""Bankruptcy prediction from financial ratios.

The pipeline selects a ratio subset (optionally with a genetic search),
clusters firms with fuzzy c-means, and fits one MARS classifier per cluster;
predictions blend the cluster models by membership. See the README for the
CLI and file formats.
"""

from .data import (
    CSV_COLUMNS,
    Dataset,
    FinancialStatement,
    Label,
    generate_synthetic,
    parse_csv,
    write_csv,
)
from .errors import BankpredError
from .fcm import FuzzyCMeans, FuzzyPartition
from .ga import GaConfig, GaResult, evolve, mask_fitness, stratified_folds
from .mars import BasisTerm, HingeFactor, MarsModel, MarsRegressor, fit_mars
from .pipeline import (
    ClusterModel,
    EvaluationReport,
    FirmPrediction,
    HybridModel,
    HybridPipeline,
    build_report,
    load_model,
    save_model,
)
from .ratios import (
    ALTMAN,
    CANONICAL_ORDER,
    OHLSON,
    SHUMWAY,
    UNION_MODEL,
    ZMIJEWSKI,
    FeatureMatrix,
    FeatureSet,
    OhlsonCoefficients,
    RatioId,
    RatioVector,
    altman_z,
    compute_ratios,
    custom_set,
    feature_set,
    ohlson_score,
    project,
    union_sets,
)

__version__ = "0.1.0"

__all__ = [
    "ALTMAN",
    "BankpredError",
    "BasisTerm",
    "CANONICAL_ORDER",
    "CSV_COLUMNS",
    "ClusterModel",
    "Dataset",
    "EvaluationReport",
    "FeatureMatrix",
    "FeatureSet",
    "FinancialStatement",
    "FirmPrediction",
    "FuzzyCMeans",
    "FuzzyPartition",
    "GaConfig",
    "GaResult",
    "HingeFactor",
    "HybridModel",
    "HybridPipeline",
    "Label",
    "MarsModel",
    "MarsRegressor",
    "OHLSON",
    "OhlsonCoefficients",
    "RatioId",
    "RatioVector",
    "SHUMWAY",
    "UNION_MODEL",
    "ZMIJEWSKI",
    "altman_z",
    "build_report",
    "compute_ratios",
    "custom_set",
    "evolve",
    "feature_set",
    "fit_mars",
    "generate_synthetic",
    "load_model",
    "mask_fitness",
    "ohlson_score",
    "parse_csv",
    "project",
    "save_model",
    "stratified_folds",
    "union_sets",
    "write_csv",
]
