"""Online graph balancing under i.i.d. edge arrivals.

Library layout:

- graphcore: graphs, statistics, seeded sampling, components
- offline:   exact max-density, peeling, orientations, bipartization, bounds
- skewness:  log-skewness scoring and the skew-biregular decomposition
- online:    Greedy, Threshold-Greedy, left-assign, regime routing
- generators: benchmark instance families
- complete:  implicit K_n support for sizes beyond materialization
- harness:   seeded Monte Carlo experiments and CSV reports
"""

from .graphcore import (
    BaseGraph,
    GraphFormat,
    GraphFormatError,
    GraphStats,
    SampledStream,
    components,
    degree_stats,
    load_graph,
    make_graph,
    sample_iid,
    save_graph,
)
from .offline import (
    Bipartization,
    DensityCertificate,
    LowerBounds,
    Orientation,
    bipartize,
    lower_bounds,
    max_density,
    offline_opt,
    optimal_orientation,
    peel_approx,
)
from .online import (
    LoadState,
    RegimePlan,
    ThresholdVector,
    augment_cliques,
    augment_isolated,
    make_thresholds,
    run_greedy,
    run_left_assign,
    run_threshold_greedy,
    select_regime,
)
from .skewness import (
    Decomposition,
    SkewScore,
    decompose,
    estimate_skew,
    skew_of_subgraph,
    verify_decomposition,
)
from .harness import ExperimentConfig, TrialReport, run_experiment, summarize

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
