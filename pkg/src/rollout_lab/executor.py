"""Numeric execution of rollout windows and carry-over streams.

Every edge carries a dense matrix, every non-input node a bias and a
shared activation; a node's value is the activation of its bias plus
the sum of incoming transformed values, taken from the source frame the
pattern dictates. Frame 0 holds initialization values (zeros unless
overridden) for non-input nodes and externally supplied samples for
input nodes, as does every later frame's input copy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    MissingInputError,
    NetworkFormatError,
    ShapeMismatchError,
)
from .graph import Edge, Network, input_nodes, require_valid, sink_nodes
from .rollout import Pattern, RolloutWindow, WindowNode, build_window
from .tableau import inference_factor, initial_state, tableau_by_paths

ACTIVATIONS = {
    "identity": lambda x: x,
    "relu": lambda x: np.maximum(x, 0.0),
    "tanh": np.tanh,
}


@dataclass(frozen=True)
class NumericSpec:
    """Dense parameters for a network.

    ``edge_weights[(u, v)]`` has shape (dims[v], dims[u]); ``node_bias``
    covers exactly the non-input nodes; ``activation`` names one of
    identity, relu, tanh.
    """

    dims: Mapping[str, int]
    edge_weights: Mapping[Edge, np.ndarray]
    node_bias: Mapping[str, np.ndarray]
    activation: str


def validate_spec(net: Network, spec: NumericSpec) -> None:
    """Raise ShapeMismatchError unless ``spec`` fits ``net`` exactly."""
    if spec.activation not in ACTIVATIONS:
        raise ShapeMismatchError(
            f"unknown activation {spec.activation!r}, expected one of {sorted(ACTIVATIONS)}")
    for v in net.nodes:
        d = spec.dims.get(v)
        if not isinstance(d, int) or isinstance(d, bool) or d < 1:
            raise ShapeMismatchError(f"node {v} needs a positive integer dimension, got {d!r}")
    inputs = set(input_nodes(net))
    for v in net.nodes:
        if v in inputs:
            if v in spec.node_bias:
                raise ShapeMismatchError(f"input node {v} must not carry a bias")
            continue
        bias = spec.node_bias.get(v)
        if bias is None:
            raise ShapeMismatchError(f"missing bias for node {v}")
        if np.asarray(bias).shape != (spec.dims[v],):
            raise ShapeMismatchError(
                f"bias for {v} has shape {np.asarray(bias).shape}, expected ({spec.dims[v]},)")
    for u, v in net.edges:
        w = spec.edge_weights.get((u, v))
        if w is None:
            raise ShapeMismatchError(f"missing weight matrix for edge {u}->{v}")
        expected = (spec.dims[v], spec.dims[u])
        if np.asarray(w).shape != expected:
            raise ShapeMismatchError(
                f"weights for {u}->{v} have shape {np.asarray(w).shape}, expected {expected}")


@dataclass(frozen=True)
class ExecutionTrace:
    """Values of every window node plus the order they were computed in."""

    window: RolloutWindow
    values: Mapping[WindowNode, np.ndarray]
    update_order: tuple[tuple[int, WindowNode], ...]

    def as_dict(self) -> dict:
        return {
            "format_version": 1,
            "window_size": self.window.window_size,
            "frames": {
                f"({i},{v})": [float(x) for x in vec]
                for (i, v), vec in sorted(self.values.items())
            },
            "update_order": [[step, f"({i},{v})"] for step, (i, v) in self.update_order],
        }


def execute_window(
    net: Network,
    pattern: Pattern,
    window_size: int,
    spec: NumericSpec,
    inputs: Sequence[Mapping[str, object]],
    frame0: Mapping[str, object] | None = None,
) -> ExecutionTrace:
    """Evaluate one window in tableau order.

    ``inputs[i]`` maps every input node to its frame-i sample, for all
    frames 0..window_size. ``frame0`` optionally overrides the zero
    initialization of non-input frame-0 nodes.
    """
    require_valid(net)
    validate_spec(net, spec)
    window = build_window(net, pattern, window_size)
    tableau = tableau_by_paths(window)  # rejects invalid patterns

    input_set = set(input_nodes(net))
    if len(inputs) < window_size + 1:
        raise MissingInputError(
            f"need input maps for frames 0..{window_size}, got {len(inputs)}")

    values: dict[WindowNode, np.ndarray] = {}
    for i in range(window_size + 1):
        for name in input_set:
            if name not in inputs[i]:
                raise MissingInputError(f"no value for input {name} at frame {i}")
            values[(i, name)] = _as_vector(inputs[i][name], spec.dims[name], f"input {name} at frame {i}")

    for v in net.nodes:
        if v in input_set:
            continue
        if frame0 and v in frame0:
            values[(0, v)] = _as_vector(frame0[v], spec.dims[v], f"frame-0 override for {v}")
        else:
            values[(0, v)] = np.zeros(spec.dims[v])
    if frame0:
        bogus = sorted(set(frame0) - (set(net.nodes) - input_set))
        if bogus:
            raise ShapeMismatchError(
                f"frame-0 overrides must name non-input nodes, got {', '.join(bogus)}")

    act = ACTIVATIONS[spec.activation]
    canon = window.pattern
    computed = sorted(
        (v for v in window.nodes if v not in initial_state(window)),
        key=lambda v: (tableau[v], v))
    for (i, v) in computed:
        acc = np.asarray(spec.node_bias[v], dtype=float).copy()
        for u in net.predecessors[v]:
            j = i - canon[(u, v)]
            acc += np.asarray(spec.edge_weights[(u, v)], dtype=float) @ values[(j, u)]
        values[(i, v)] = act(acc)
    order = tuple((tableau[v], v) for v in computed)
    return ExecutionTrace(window=window, values=values, update_order=order)


def _as_vector(value: object, dim: int, what: str) -> np.ndarray:
    vec = np.asarray(value, dtype=float)
    if vec.shape != (dim,):
        raise ShapeMismatchError(f"{what} has shape {vec.shape}, expected ({dim},)")
    return vec


@dataclass(frozen=True)
class StreamResponse:
    step: int
    frame: int
    values: Mapping[str, np.ndarray]


def execute_stream(
    net: Network,
    pattern: Pattern,
    spec: NumericSpec,
    input_sequence: Sequence[Mapping[str, object]],
    steps: int,
    outputs: Iterable[str] | None = None,
) -> list[StreamResponse]:
    """Run repeated size-1 windows with carry-over for ``steps`` update steps.

    One window, costing the pattern's inference factor F in steps,
    produces one new frame and consumes one new input sample (sample
    index = frame index, frame 0 included), so the t-th frame's outputs
    appear at step t * F. Sample t-1 feeds the carried frame and sample
    t the new one.
    """
    require_valid(net)
    validate_spec(net, spec)
    period = inference_factor(net, pattern)
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    frames = steps // period
    if len(input_sequence) < frames + 1:
        raise MissingInputError(
            f"{steps} steps cover frames 0..{frames}, needing {frames + 1} input samples, "
            f"got {len(input_sequence)}")
    targets = _resolve_outputs(net, outputs)

    input_set = set(input_nodes(net))
    hidden = [v for v in net.nodes if v not in input_set]
    carry = {v: np.zeros(spec.dims[v]) for v in hidden}
    responses: list[StreamResponse] = []
    for t in range(1, frames + 1):
        trace = execute_window(
            net, pattern, 1, spec,
            inputs=[input_sequence[t - 1], input_sequence[t]],
            frame0=carry)
        carry = {v: trace.values[(1, v)] for v in hidden}
        responses.append(StreamResponse(
            step=t * period,
            frame=t,
            values={o: trace.values[(1, o)] for o in targets}))
    return responses


def _resolve_outputs(net: Network, outputs: Iterable[str] | None) -> tuple[str, ...]:
    if outputs is None:
        resolved = sink_nodes(net)
        if not resolved:
            raise ValueError("network has no sink nodes; pass outputs explicitly")
        return resolved
    targets = tuple(sorted(set(outputs)))
    if not targets:
        raise ValueError("outputs must be non-empty")
    unknown = [o for o in targets if o not in set(net.nodes)]
    if unknown:
        raise ValueError(f"unknown output node(s): {', '.join(unknown)}")
    return targets


@dataclass(frozen=True)
class ComparisonReport:
    """Stream comparison of two patterns on shared input sequences.

    ``deviations`` maps each tried frame offset to the largest absolute
    output difference across all trials once both streams have passed
    their first response. Equivalent means some single offset stays
    below tolerance everywhere, i.e. the streams compute the same
    function up to pipeline delay.
    """

    equivalent: bool
    best_offset: int | None
    max_deviation: float
    deviations: Mapping[int, float]
    trials: int
    tolerance: float

    def as_dict(self) -> dict:
        return {
            "equivalent": self.equivalent,
            "best_offset": self.best_offset,
            "max_deviation": self.max_deviation,
            "deviations": {str(o): d for o, d in sorted(self.deviations.items())},
            "trials": self.trials,
            "tolerance": self.tolerance,
        }


def compare_rollout_functions(
    net: Network,
    a: Pattern,
    b: Pattern,
    spec: NumericSpec,
    trials: int = 5,
    tolerance: float = 1e-6,
    *,
    outputs: Iterable[str] | None = None,
    frames: int = 12,
    max_offset: int | None = None,
    seed: int = 0,
) -> ComparisonReport:
    """Decide whether two patterns compute the same stream up to a shift.

    Each trial feeds one seeded time-varying input sequence through both
    patterns and aligns pattern a's frame n+offset with pattern b's
    frame n, skipping frames before either stream's first response.
    """
    require_valid(net)
    validate_spec(net, spec)
    from .scheduler import response_profile  # local import, avoids a cycle

    targets = _resolve_outputs(net, outputs)
    if max_offset is None:
        max_offset = len(net.nodes) + 1
    frames = max(frames, len(net.nodes) + max_offset + 3)

    first_frame = {}
    period = {}
    for name, pattern in (("a", a), ("b", b)):
        period[name] = inference_factor(net, pattern)
        profile = response_profile(net, pattern, targets, horizon=frames * period[name])
        if profile.first_response_step is None:
            raise MissingInputError("no response within the comparison horizon")
        first_frame[name] = profile.first_response_step // period[name]

    inputs = input_nodes(net)
    worst: dict[int, float] = {o: 0.0 for o in range(-max_offset, max_offset + 1)}
    overlap: dict[int, bool] = {o: False for o in worst}
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        sequence = [
            {name: rng.uniform(-1.0, 1.0, spec.dims[name]) for name in inputs}
            for _ in range(frames + 1)
        ]
        streams = {
            name: execute_stream(net, pattern, spec, sequence,
                                 steps=frames * period[name], outputs=targets)
            for name, pattern in (("a", a), ("b", b))
        }
        by_frame = {
            name: {r.frame: r.values for r in stream}
            for name, stream in streams.items()
        }
        for offset in worst:
            for n in range(1, frames + 1):
                m = n + offset
                if n < first_frame["b"] or m < first_frame["a"] or not 1 <= m <= frames:
                    continue
                overlap[offset] = True
                for o in targets:
                    dev = float(np.max(np.abs(by_frame["a"][m][o] - by_frame["b"][n][o])))
                    if dev > worst[offset]:
                        worst[offset] = dev
    deviations = {o: worst[o] for o in worst if overlap[o]}
    if not deviations:
        raise MissingInputError("comparison horizon too short for any aligned frames")
    best_offset = min(deviations, key=lambda o: (deviations[o], abs(o), o))
    best = deviations[best_offset]
    return ComparisonReport(
        equivalent=best < tolerance,
        best_offset=best_offset,
        max_deviation=best,
        deviations=deviations,
        trials=trials,
        tolerance=tolerance,
    )


def random_numeric_spec(
    net: Network,
    seed: int,
    *,
    dims: Mapping[str, int] | int | None = None,
    max_dim: int = 3,
    activation: str = "tanh",
) -> NumericSpec:
    """Seeded spec with uniform [-1, 1] weights and biases."""
    require_valid(net)
    rng = np.random.default_rng(seed)
    if dims is None:
        sizes = {v: int(rng.integers(1, max_dim + 1)) for v in net.nodes}
    elif isinstance(dims, int):
        sizes = {v: dims for v in net.nodes}
    else:
        sizes = {v: int(dims[v]) for v in net.nodes}
    weights = {
        (u, v): rng.uniform(-1.0, 1.0, (sizes[v], sizes[u]))
        for u, v in net.edges
    }
    inputs = set(input_nodes(net))
    biases = {
        v: rng.uniform(-1.0, 1.0, sizes[v])
        for v in net.nodes if v not in inputs
    }
    spec = NumericSpec(dims=sizes, edge_weights=weights, node_bias=biases, activation=activation)
    validate_spec(net, spec)
    return spec


# ---------------------------------------------------------------------------
# file formats


def parse_numeric_spec_json(text: str) -> NumericSpec:
    """Parse a spec file: dims, row-major edge matrices, biases, activation."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from exc
    if not isinstance(doc, dict):
        raise NetworkFormatError("numeric spec JSON must be an object")
    if doc.get("format_version", 1) != 1:
        raise NetworkFormatError(f"unsupported format_version {doc.get('format_version')!r}")
    unknown = sorted(set(doc) - {"format_version", "dims", "edges", "biases", "activation"})
    if unknown:
        raise NetworkFormatError(f"unknown key(s): {', '.join(map(str, unknown))}")
    dims = doc.get("dims")
    edges = doc.get("edges")
    biases = doc.get("biases", {})
    activation = doc.get("activation", "identity")
    if not isinstance(dims, dict) or not all(
            isinstance(k, str) and isinstance(v, int) and not isinstance(v, bool)
            for k, v in dims.items()):
        raise NetworkFormatError("'dims' must map node names to integers")
    if not isinstance(edges, dict) or not isinstance(biases, dict):
        raise NetworkFormatError("'edges' and 'biases' must be objects")
    weights: dict[Edge, np.ndarray] = {}
    for key, rows in edges.items():
        parts = key.split("->")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise NetworkFormatError(f"bad edge key {key!r}, expected 'src->tgt'")
        try:
            matrix = np.asarray(rows, dtype=float)
        except (TypeError, ValueError) as exc:
            raise NetworkFormatError(f"matrix for {key!r} is not rectangular numeric rows") from exc
        if matrix.ndim != 2:
            raise NetworkFormatError(f"matrix for {key!r} must be a list of rows")
        weights[(parts[0], parts[1])] = matrix
    vectors: dict[str, np.ndarray] = {}
    for name, row in biases.items():
        try:
            vec = np.asarray(row, dtype=float)
        except (TypeError, ValueError) as exc:
            raise NetworkFormatError(f"bias for {name!r} is not a numeric list") from exc
        if vec.ndim != 1:
            raise NetworkFormatError(f"bias for {name!r} must be a flat list")
        vectors[name] = vec
    return NumericSpec(dims=dict(dims), edge_weights=weights,
                       node_bias=vectors, activation=activation)


def numeric_spec_to_json(spec: NumericSpec) -> str:
    doc = {
        "format_version": 1,
        "dims": {k: int(v) for k, v in sorted(spec.dims.items())},
        "edges": {
            f"{u}->{v}": [[float(x) for x in row] for row in np.asarray(w)]
            for (u, v), w in sorted(spec.edge_weights.items())
        },
        "biases": {
            k: [float(x) for x in np.asarray(vec)]
            for k, vec in sorted(spec.node_bias.items())
        },
        "activation": spec.activation,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def parse_input_sequence(text: str) -> list[dict[str, np.ndarray]]:
    """Parse a JSON array of per-frame input maps."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from exc
    if not isinstance(doc, list):
        raise NetworkFormatError("input sequence must be a JSON array of objects")
    frames: list[dict[str, np.ndarray]] = []
    for idx, entry in enumerate(doc):
        if not isinstance(entry, dict):
            raise NetworkFormatError(f"frame {idx} must be an object mapping inputs to vectors")
        frame: dict[str, np.ndarray] = {}
        for name, row in entry.items():
            try:
                vec = np.asarray(row, dtype=float)
            except (TypeError, ValueError) as exc:
                raise NetworkFormatError(f"frame {idx} value for {name!r} is not numeric") from exc
            if vec.ndim != 1:
                raise NetworkFormatError(f"frame {idx} value for {name!r} must be a flat list")
            frame[name] = vec
        frames.append(frame)
    return frames
