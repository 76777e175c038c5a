"""Growing-network attachment mixtures: generation, scoring, and inference."""

from .errors import (
    DegenerateModelError,
    FitError,
    GraphError,
    GrowthFitError,
    GrowthStallError,
    IntervalUnderflowError,
    MissingAnchorError,
    ModelError,
    ModelSpecError,
    NestingViolationError,
    NoFeasibleFitError,
    RejectedIncrementError,
    StreamError,
    StreamParseError,
    UndefinedRatioError,
    UnknownNodeError,
    UnsupportedSimilarityError,
)
from .estimation import (
    ChangepointFit,
    FitResult,
    ScalarFit,
    WeightFit,
    WilksReport,
    changepoint_grid,
    changepoint_series_from_cache,
    chi_square_sf,
    compare_interval_fits,
    default_alpha_grid,
    fit_changepoint,
    fit_component_family,
    fit_degree_exponent,
    fit_dp_changepoint,
    fit_dp_changepoint_joint,
    fit_intervals,
    fit_mixture_weights,
    fit_stream_mixture,
    partition_indices,
    scan_interval_counts,
    simplex_grid,
    wilks_test,
)
from .generate import GrowthRecipe, MixtureSampler, grow, sample_choice_frequencies
from .graph import (
    DynamicGraph,
    GrowthStream,
    Increment,
    apply_increment,
    clique_graph,
    graph_from_edges,
    snapshot_degrees,
)
from .likelihood import (
    ChoiceCache,
    DPTrace,
    IncrementScore,
    LikelihoodSummary,
    build_choice_cache,
    build_dp_trace,
    cache_loglik,
    cache_logratios,
    dp_trace_loglik,
    dp_trace_logp,
    increment_probability,
    per_choice_ratio,
    score_stream,
)
from .models import (
    BoundaryMode,
    ChoiceRole,
    Component,
    DegreePower,
    MixtureInterval,
    ModelSchedule,
    Random,
    RankPreference,
    TriangleClosure,
    barabasi_albert,
    component_weights,
    model_similarity,
    node_probabilities,
)
from .modelspec import (
    format_component,
    format_model_spec,
    parse_component,
    parse_model_spec,
)
from .netstats import (
    StatRow,
    aggregate_series,
    graph_stats,
    stats_series,
    write_stats_csv,
)
from .stream import (
    CleaningReport,
    EdgeRecord,
    OperationRow,
    OperationSchedule,
    clean_stream,
    extract_operation_schedule,
    group_increments,
    ingest_edge_file,
    load_stream,
    parse_edge_file,
    read_op_schedule,
    read_star_stream,
    sniff_format,
    stream_edge_records,
    summarize_stream,
    write_edge_file,
    write_op_schedule,
    write_star_stream,
)

__version__ = "0.1.0"
