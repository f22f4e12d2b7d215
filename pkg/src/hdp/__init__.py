"""Heterogeneous defect prediction benchmark library.

Predicts defects across projects whose metric schemas do not overlap by
matching statistically similar metric distributions (KS test p-values scored
through maximum-weight bipartite matching), then benchmarks the result
against within-project and same-schema cross-project baselines.
"""

from .dataset import (
    DatasetError,
    DatasetStats,
    DefectDataset,
    Manifest,
    ManifestEntry,
    apply_inclusion_criteria,
    compute_stats,
    load_dataset,
    load_manifest,
)
from .matching import (
    POLICY_ALL_SOURCE,
    POLICY_ANY,
    MetricMatching,
    ScoreMatrix,
    apply_cutoff,
    match,
    max_weight_matching,
    score_matrix,
)
from .model import ForestModel, Hyperparameters, LogisticModel, fit_logistic, fit_random_forest
from .selection import SelectedFeatures, discretize, gain_ratio, select_top
from .stats import (
    CliffsDelta,
    KsResult,
    WilcoxonResult,
    auc_roc,
    cliffs_delta,
    ks_two_sample,
    spearman,
    t_test_one_sample,
    wilcoxon_signed_rank,
)

__version__ = "0.1.0"
