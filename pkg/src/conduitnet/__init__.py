"""Multilayer ownership/tax network analysis.

Propagates firm operating income up shareholding chains, scores
jurisdiction x sector pairs as value sinks and conduits, measures
withholding-tax load centrality from routed dividend packets, and
fuses the layers into a combined multilayer centrality.
"""

__version__ = "0.1.0"

from .errors import (
    ComputationError,
    ConduitNetError,
    InputError,
    ZeroTotalValueError,
    ZeroVarianceError,
)
from .model import (
    Firm,
    Jurisdiction,
    MultilayerNetwork,
    OwnershipLink,
    PairKey,
    Sector,
    TaxNetwork,
    build_network,
    pair_of,
)
from .ingest import (
    parse_firms,
    parse_gdp,
    parse_ownership,
    parse_tax_matrix,
)
from .valueflow import (
    CycleReport,
    ValueFlowResult,
    condense_cycles,
    find_sources,
    propagate_value,
    total_value,
)
from .scoring import (
    SINK_THRESHOLD_DEFAULT,
    ConduitAnalysis,
    ConduitScore,
    SinkScore,
    combine_euclidean,
    compute_sink_scores,
    conduit_raw,
    identify_sinks,
    sink_centrality,
    standardize_series,
)
from .taxrouting import (
    MAX_HOPS_DEFAULT,
    LoadScore,
    RoutingCostModel,
    RoutingDiagnostics,
    load_centrality,
    load_scores,
    standardize_load,
)
from .multilayer import (
    ALPHA_DEFAULT,
    BETA_DEFAULT,
    BetaSweep,
    MultilayerScore,
    beta_sweep,
    multilayer_component,
    multilayer_score,
    multilayer_scores,
)
from .synth import SynthConfig, generate, write_bundle
from .oracles import oracle_conduit_credits, oracle_load, oracle_value_flow
from .pipeline import AnalysisParams, input_paths, run_pipeline

__all__ = [
    "__version__",
    "ConduitNetError", "InputError", "ComputationError",
    "ZeroTotalValueError", "ZeroVarianceError",
    "PairKey", "Jurisdiction", "Sector", "Firm", "OwnershipLink",
    "TaxNetwork", "MultilayerNetwork", "build_network", "pair_of",
    "parse_firms", "parse_ownership", "parse_tax_matrix", "parse_gdp",
    "CycleReport", "ValueFlowResult", "find_sources", "condense_cycles",
    "propagate_value", "total_value",
    "SINK_THRESHOLD_DEFAULT", "SinkScore", "ConduitScore", "ConduitAnalysis",
    "standardize_series", "combine_euclidean", "sink_centrality",
    "compute_sink_scores", "identify_sinks", "conduit_raw",
    "MAX_HOPS_DEFAULT", "RoutingCostModel", "RoutingDiagnostics",
    "LoadScore", "load_centrality", "load_scores", "standardize_load",
    "ALPHA_DEFAULT", "BETA_DEFAULT", "MultilayerScore", "BetaSweep",
    "multilayer_component", "multilayer_score", "multilayer_scores", "beta_sweep",
    "SynthConfig", "generate", "write_bundle",
    "oracle_value_flow", "oracle_load", "oracle_conduit_credits",
    "AnalysisParams", "input_paths", "run_pipeline",
]
