"""Shapley-value feature attributions for score-based rankings.

Explains four ranked outcomes of an item (score, rank, top-k membership,
pairwise preference) as per-feature Shapley contributions, exactly or by
Monte Carlo coalition sampling, with evaluation metrics, synthetic data
generators, and report emission.
"""

from .docio import (
    ExplanationDocument,
    dataset_fingerprint,
    read_dataset_csv,
    read_explanation_document,
    read_explanations,
    write_dataset_csv,
    write_explanations,
)
from .engine import (
    EXACT,
    CoalitionWeight,
    EngineOptions,
    draw_samples,
    enumerate_coalitions,
    explain_all,
    explain_item,
    explain_pair,
    qoi_value,
)
from .errors import ComputationError, RankattrError, SchemaError, ValidationError
from .fixtures import admissions_dataset, admissions_scorer
from .metrics import (
    NeighborSpec,
    SensitivityTriple,
    fidelity,
    method_agreement,
    method_fidelity,
    sensitivity,
    similarity,
)
from .model import (
    Dataset,
    ExplanationVector,
    QoIKind,
    compose_hybrid,
    validate_dataset,
)
from .payoffs import PayoffContext, iota, make_context, payoff_one, payoff_pair
from .scoring import (
    Ranking,
    ScoringFunction,
    parse_scorer_config,
    rank_all,
    rank_of_replacement,
    score,
)
from .strata import StratumSummary, stratify_aggregate
from .svgplot import waterfall_svg, write_waterfall_svg
from .synth import (
    FeatureSpec,
    SyntheticSpec,
    bernoulli,
    builtin_spec,
    gaussian,
    generate_synthetic,
    uniform,
)

__version__ = "0.1.0"

__all__ = [
    "EXACT",
    "CoalitionWeight",
    "ComputationError",
    "Dataset",
    "EngineOptions",
    "ExplanationDocument",
    "ExplanationVector",
    "FeatureSpec",
    "NeighborSpec",
    "PayoffContext",
    "QoIKind",
    "RankattrError",
    "Ranking",
    "SchemaError",
    "ScoringFunction",
    "SensitivityTriple",
    "StratumSummary",
    "SyntheticSpec",
    "ValidationError",
    "admissions_dataset",
    "admissions_scorer",
    "bernoulli",
    "builtin_spec",
    "compose_hybrid",
    "dataset_fingerprint",
    "draw_samples",
    "enumerate_coalitions",
    "explain_all",
    "explain_item",
    "explain_pair",
    "fidelity",
    "gaussian",
    "generate_synthetic",
    "iota",
    "make_context",
    "method_agreement",
    "method_fidelity",
    "parse_scorer_config",
    "payoff_one",
    "payoff_pair",
    "qoi_value",
    "rank_all",
    "rank_of_replacement",
    "read_dataset_csv",
    "read_explanation_document",
    "read_explanations",
    "score",
    "sensitivity",
    "similarity",
    "stratify_aggregate",
    "uniform",
    "validate_dataset",
    "waterfall_svg",
    "write_dataset_csv",
    "write_explanations",
    "write_waterfall_svg",
]
