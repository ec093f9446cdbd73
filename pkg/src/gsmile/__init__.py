"""Model-agnostic token attribution for black-box generative models.

Perturb a prompt with inclusion masks, measure how far each perturbation
moves the model's output under transport distances, and fit a locally
weighted linear surrogate whose coefficients attribute the shift to tokens.
"""

from .adapters import MockModel, ModelSpec, ResponseCache, digest_key, query
from .embed import (
    EmbeddingTable,
    WeightedPointCloud,
    doc_to_nbow,
    load_embedding_table,
    load_point_cloud,
)
from .errors import GsmileError
from .metrics import (
    FidelityReport,
    att_acc,
    att_auroc,
    att_f1,
    consistency_stats,
    fidelity_report,
    jaccard_topk,
)
from .perturb import TokenSequence, apply_mask, mask_to_features, sample_masks, tokenize
from .pipeline import (
    AttributionResult,
    PerturbationRecord,
    RunConfig,
    consistency_probe,
    evaluate,
    explain,
    export_report,
    import_report,
    render_heatmap,
    stability_probe,
)
from .significance import SignificanceResult, bootstrap_pvalue, filter_significant
from .surrogate import (
    SurrogateModel,
    fit_bayesian_ridge,
    fit_weighted_linear,
    predict,
    surrogate_loss,
)
from .transport import (
    TransportPlan,
    emd,
    gaussian_weight,
    median_sigma,
    wasserstein_1d,
    wmd,
)

__version__ = "0.1.0"

__all__ = [
    "AttributionResult",
    "EmbeddingTable",
    "FidelityReport",
    "GsmileError",
    "MockModel",
    "ModelSpec",
    "PerturbationRecord",
    "ResponseCache",
    "RunConfig",
    "SignificanceResult",
    "SurrogateModel",
    "TokenSequence",
    "TransportPlan",
    "WeightedPointCloud",
    "apply_mask",
    "att_acc",
    "att_auroc",
    "att_f1",
    "bootstrap_pvalue",
    "consistency_probe",
    "consistency_stats",
    "digest_key",
    "doc_to_nbow",
    "emd",
    "evaluate",
    "explain",
    "export_report",
    "fidelity_report",
    "filter_significant",
    "fit_bayesian_ridge",
    "fit_weighted_linear",
    "gaussian_weight",
    "import_report",
    "jaccard_topk",
    "load_embedding_table",
    "load_point_cloud",
    "mask_to_features",
    "median_sigma",
    "predict",
    "query",
    "render_heatmap",
    "sample_masks",
    "stability_probe",
    "surrogate_loss",
    "tokenize",
    "wasserstein_1d",
    "wmd",
]
