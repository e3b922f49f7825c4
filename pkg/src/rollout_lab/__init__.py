"""Rollout patterns for cyclic computation graphs.

Networks with cycles admit many ways of being unrolled over time
frames. This package models those rollout patterns, checks and
enumerates them, bounds their count, derives update schedules and
response timing, and executes them numerically, both as single windows
and as carry-over streams.
"""

from .errors import (
    DomainMismatchError,
    EnumerationCapError,
    InvalidNetworkError,
    InvalidPatternError,
    MissingCostError,
    MissingInputError,
    NetworkFormatError,
    NoInputOutputPathError,
    NonConvergenceError,
    RolloutLabError,
    ShapeMismatchError,
    WindowTooSmallError,
)
from .executor import (
    ComparisonReport,
    ExecutionTrace,
    NumericSpec,
    StreamResponse,
    compare_rollout_functions,
    execute_stream,
    execute_window,
    numeric_spec_to_json,
    parse_input_sequence,
    parse_numeric_spec_json,
    random_numeric_spec,
    validate_spec,
)
from .graph import (
    CycleAnalysis,
    Edge,
    Network,
    Path,
    ValidationIssue,
    ValidationReport,
    classify_edges,
    generate_dsr,
    generate_random,
    input_nodes,
    io_path_extremes,
    minimal_cycles,
    network_to_json,
    network_to_text,
    parse_network,
    parse_network_json,
    parse_network_text,
    require_valid,
    sink_nodes,
    validate_network,
)
from .rollout import (
    Lemma1Bounds,
    RolloutWindow,
    WindowEdge,
    WindowNode,
    build_window,
    enumerate_valid_patterns,
    equally_model_parallel,
    is_valid,
    lemma1_bounds,
    most_sequential_patterns,
    parse_pattern_json,
    pattern_to_json,
    require_same_domain,
    streaming_pattern,
    window_to_dot,
)
from .scheduler import (
    CostModel,
    MakespanReport,
    ParallelismProfile,
    Response,
    ResponseProfile,
    SweepRow,
    dsr_sweep,
    parallelism_profile,
    response_profile,
    sweep_to_csv,
    weighted_makespan,
)
from .tableau import (
    Theorem1Report,
    full_state,
    inference_factor,
    initial_state,
    steps_to_full,
    tableau_by_paths,
    tableau_by_updates,
    tableau_to_dot,
    tableau_to_json,
    theorem1_check,
    theorem1_sweep,
    update_step,
)

__version__ = "0.1.0"
