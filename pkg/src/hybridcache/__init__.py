"""Trace-driven edge-cloud caching simulator with a hybrid bandit policy."""

from .catalog import (
    Catalog,
    CatalogConfig,
    ContentItem,
    Regime,
    build_catalog,
    feature_influence,
    normalize_features,
)
from .engine import RunMetrics, cumulative_regret, run_simulation
from .policy import (
    BanditState,
    HybridPolicy,
    Placement,
    exact_knapsack,
    greedy_knapsack,
    hybrid_ucb_index,
    hybrid_update,
    make_policy,
)
from .popularity import (
    AllocationEstimate,
    AllocationEstimator,
    PopularitySnapshot,
    empirical_popularity,
    estimate_allocation,
)
from .workload import (
    ParetoVolume,
    RequestTrace,
    ZipfModel,
    generate_trace,
    sample_pareto_volume,
    snm_rate,
    zipf_pmf,
)

__version__ = "0.1.0"
