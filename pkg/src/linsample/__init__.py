"""Sublinear-query linear sampling of weighted metric instances.

Edges of a complete weighted graph with a scaled triangle inequality are
sampled with probability proportional to their weights, using far fewer
weight queries than there are pairs.  The sampled graph supports
downstream approximation: average weight, densest subgraph, max cut, and
size-k group matching, each with an exact brute-force reference solver
for small instances and a CLI experiment harness.
"""

from .algorithms import (
    CutAssignment,
    HypermatchingPartition,
    PipelineResult,
    SubgraphSelection,
    beta_for_problem,
    complete_edge_graph,
    evaluate_cut,
    evaluate_density,
    evaluate_partition,
    greedy_densest,
    greedy_hypermatching,
    local_search_maxcut,
    sparsify_and_solve,
)
from .decompose import (
    DecomposeConstants,
    Decomposition,
    DecompositionLevel,
    build_decomposition,
    build_nu,
    estimate_weight_upper_bound,
)
from .exact import exact_average, exact_densest, exact_hypermatching, exact_maxcut
from .oracle import (
    EuclideanInstance,
    HiddenHubInstance,
    LambdaCheck,
    MatrixInstance,
    MetricInstance,
    PowerInstance,
    QueryBudgetExhausted,
    QueryLedger,
    RecordingInstance,
    StarInstance,
    ZeroInstance,
    load_matrix_csv,
    load_points_csv,
    make_euclidean_family,
    make_indistinguishable_pair,
    make_star,
    parse_instance_spec,
    power_wrap,
    validate_lambda_metric,
    weight_query,
    weight_query_batch,
)
from .sampler import (
    AverageEstimate,
    DegenerateInstanceError,
    InternalConsistencyError,
    SampledGraph,
    SamplerConfig,
    build_h_alpha,
    build_h_beta,
    crude_average_estimate,
    estimate_average_from_h,
    refine_average_estimate,
    required_depth,
    uniform_sample,
)

__version__ = "0.1.0"

__all__ = [
    "AverageEstimate",
    "CutAssignment",
    "DecomposeConstants",
    "Decomposition",
    "DecompositionLevel",
    "DegenerateInstanceError",
    "EuclideanInstance",
    "HiddenHubInstance",
    "HypermatchingPartition",
    "InternalConsistencyError",
    "LambdaCheck",
    "MatrixInstance",
    "MetricInstance",
    "PipelineResult",
    "PowerInstance",
    "QueryBudgetExhausted",
    "QueryLedger",
    "RecordingInstance",
    "SampledGraph",
    "SamplerConfig",
    "StarInstance",
    "SubgraphSelection",
    "ZeroInstance",
    "beta_for_problem",
    "build_decomposition",
    "build_h_alpha",
    "build_h_beta",
    "build_nu",
    "complete_edge_graph",
    "crude_average_estimate",
    "estimate_average_from_h",
    "estimate_weight_upper_bound",
    "evaluate_cut",
    "evaluate_density",
    "evaluate_partition",
    "exact_average",
    "exact_densest",
    "exact_hypermatching",
    "exact_maxcut",
    "greedy_densest",
    "greedy_hypermatching",
    "load_matrix_csv",
    "load_points_csv",
    "local_search_maxcut",
    "make_euclidean_family",
    "make_indistinguishable_pair",
    "make_star",
    "parse_instance_spec",
    "power_wrap",
    "refine_average_estimate",
    "required_depth",
    "sparsify_and_solve",
    "uniform_sample",
    "validate_lambda_metric",
    "weight_query",
    "weight_query_batch",
]
