"""Execution schedules and response timing derived from rollout windows.

A window's tableau already is a schedule under unlimited parallelism
and unit costs: step n executes exactly the nodes with tableau value n.
This module generalizes that to weighted node costs and a bounded
worker count, and projects windows onto wall-clock response behavior
when frames are produced one at a time with carry-over.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import (
    InvalidPatternError,
    MissingCostError,
    NoInputOutputPathError,
)
from .graph import Network, generate_dsr, input_nodes, require_valid
from .rollout import (
    Pattern,
    RolloutWindow,
    WindowNode,
    most_sequential_patterns,
    require_same_domain,
    streaming_pattern,
)
from .tableau import inference_factor, initial_state, tableau_by_paths


def _fmt(v: WindowNode) -> str:
    return f"({v[0]},{v[1]})"


@dataclass(frozen=True)
class CostModel:
    """Per-node execution costs; every cost must be positive."""

    node_cost: Mapping[str, float]

    def __post_init__(self) -> None:
        for name, cost in self.node_cost.items():
            if not cost > 0:
                raise ValueError(f"cost for {name} must be positive, got {cost}")

    @staticmethod
    def unit(net: Network) -> "CostModel":
        return CostModel({v: 1.0 for v in net.nodes})

    def of(self, name: str) -> float:
        try:
            return float(self.node_cost[name])
        except KeyError:
            raise MissingCostError(f"no cost assigned to node {name}") from None


@dataclass(frozen=True)
class ParallelismProfile:
    """Which window nodes update at which step, step index = tableau value."""

    initial: tuple[WindowNode, ...]
    per_step: tuple[tuple[WindowNode, ...], ...]

    def as_dict(self) -> dict:
        return {
            "initial": [_fmt(v) for v in self.initial],
            "per_step": [[_fmt(v) for v in step] for step in self.per_step],
        }


def parallelism_profile(window: RolloutWindow) -> ParallelismProfile:
    """Group window nodes by tableau value; the groups partition the window."""
    tableau = tableau_by_paths(window)
    depth = max(tableau.values())
    groups: list[list[WindowNode]] = [[] for _ in range(depth + 1)]
    for v in window.nodes:
        groups[tableau[v]].append(v)
    return ParallelismProfile(
        initial=tuple(sorted(groups[0])),
        per_step=tuple(tuple(sorted(g)) for g in groups[1:]),
    )


@dataclass(frozen=True)
class MakespanReport:
    """Completion-time summary of one window execution.

    With ``parallel_limit`` None the schedule is the exact critical-path
    optimum; with a worker bound it comes from greedy list scheduling
    (earliest-ready first, ties in canonical node order), a heuristic,
    and ``critical_path`` is left empty.
    """

    total_time: float
    critical_path: tuple[WindowNode, ...]
    per_frame_time: tuple[float, ...]
    parallel_limit: int | None
    heuristic: bool

    def as_dict(self) -> dict:
        return {
            "total_time": self.total_time,
            "critical_path": [_fmt(v) for v in self.critical_path],
            "per_frame_time": list(self.per_frame_time),
            "parallel_limit": self.parallel_limit,
            "heuristic": self.heuristic,
        }


def weighted_makespan(
    window: RolloutWindow,
    costs: CostModel | Mapping[str, float] | None = None,
    parallel_limit: int | None = None,
) -> MakespanReport:
    """Makespan of the window under per-node costs.

    Initial nodes (frame 0 and input copies) are free and finish at
    time 0; every other node runs for its cost once its predecessors
    are done. Unit costs and unlimited workers reproduce the tableau.
    """
    if parallel_limit is not None and parallel_limit < 1:
        raise ValueError(f"parallel_limit must be >= 1 or None, got {parallel_limit}")
    if costs is None:
        costs = CostModel.unit(window.network)
    elif not isinstance(costs, CostModel):
        costs = CostModel(dict(costs))
    tableau = tableau_by_paths(window)  # also rejects invalid windows

    init = initial_state(window)
    scheduled = [v for v in window.nodes if v not in init]
    pred = window.active_in_edges

    if parallel_limit is None:
        finish: dict[WindowNode, float] = {v: 0.0 for v in init}
        parent: dict[WindowNode, WindowNode | None] = {}
        for v in sorted(scheduled, key=lambda v: (tableau[v], v)):
            best: WindowNode | None = None
            start = 0.0
            for u in pred[v]:
                if finish[u] > start:
                    start = finish[u]
                    best = u
            finish[v] = start + costs.of(v[1])
            parent[v] = best if best is not None and best not in init else None
        total = max((finish[v] for v in scheduled), default=0.0)
        path: list[WindowNode] = []
        if scheduled:
            cursor: WindowNode | None = min(
                (v for v in scheduled if finish[v] == total), default=None)
            while cursor is not None:
                path.append(cursor)
                cursor = parent[cursor]
            path.reverse()
        per_frame = _per_frame(window, finish)
        return MakespanReport(total, tuple(path), per_frame, None, heuristic=False)

    # greedy list scheduling with a bounded worker pool
    remaining = {v: sum(1 for u in pred[v] if u not in init) for v in scheduled}
    ready_at = {v: 0.0 for v in scheduled}
    succ: dict[WindowNode, list[WindowNode]] = {v: [] for v in scheduled}
    for v in scheduled:
        for u in pred[v]:
            if u not in init:
                succ[u].append(v)
    ready = [(0.0, v) for v in scheduled if remaining[v] == 0]
    heapq.heapify(ready)
    running: list[tuple[float, WindowNode]] = []
    finish = {v: 0.0 for v in init}
    free = parallel_limit
    now = 0.0
    done = 0
    while done < len(scheduled):
        while free and ready and ready[0][0] <= now:
            _, v = heapq.heappop(ready)
            finish[v] = now + costs.of(v[1])
            heapq.heappush(running, (finish[v], v))
            free -= 1
        if not running:
            now = ready[0][0]
            continue
        now = max(now, running[0][0])
        while running and running[0][0] <= now:
            _, v = heapq.heappop(running)
            free += 1
            done += 1
            for w in succ[v]:
                ready_at[w] = max(ready_at[w], finish[v])
                remaining[w] -= 1
                if remaining[w] == 0:
                    heapq.heappush(ready, (ready_at[w], w))
    total = max((finish[v] for v in scheduled), default=0.0)
    return MakespanReport(
        total, (), _per_frame(window, finish), parallel_limit, heuristic=True)


def _per_frame(window: RolloutWindow, finish: Mapping[WindowNode, float]) -> tuple[float, ...]:
    frames = [0.0] * (window.window_size + 1)
    for (i, _), t in finish.items():
        if t > frames[i]:
            frames[i] = t
    return tuple(frames)


@dataclass(frozen=True)
class Response:
    step: int
    frame: int
    samples: tuple[int, ...]


@dataclass(frozen=True)
class ResponseProfile:
    """Output timing under frame-at-a-time execution with carry-over.

    One new frame completes every ``sampling_period`` update steps (the
    pattern's inference factor); frame t therefore lands at step t * F.
    ``samples`` lists the input frame indices whose values have causally
    reached the outputs by that frame, traced through the unrolled
    dependency structure. ``first_response_step`` is the first step
    whose frame integrates at least one sample, None when the horizon
    ends before that.
    """

    first_response_step: int | None
    sampling_period: int
    responses: tuple[Response, ...]

    def as_dict(self) -> dict:
        return {
            "first_response_step": self.first_response_step,
            "sampling_period": self.sampling_period,
            "responses": [
                {"step": r.step, "frame": r.frame, "samples": list(r.samples)}
                for r in self.responses
            ],
        }


def response_profile(
    net: Network,
    pattern: Pattern,
    outputs: Iterable[str],
    horizon: int,
) -> ResponseProfile:
    """Trace which input samples the outputs integrate within ``horizon`` steps."""
    require_valid(net)
    canon = require_same_domain(net, pattern)
    targets = sorted(set(outputs))
    if not targets:
        raise ValueError("outputs must be non-empty")
    unknown = [o for o in targets if o not in set(net.nodes)]
    if unknown:
        raise ValueError(f"unknown output node(s): {', '.join(unknown)}")
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    period = inference_factor(net, pattern)  # rejects invalid patterns

    inputs = set(input_nodes(net))
    reach = set(inputs)
    frontier = list(inputs)
    while frontier:
        u = frontier.pop()
        for w in net.successors[u]:
            if w not in reach:
                reach.add(w)
                frontier.append(w)
    if not any(o in reach for o in targets):
        raise NoInputOutputPathError(
            f"outputs {{{', '.join(targets)}}} are unreachable from the input set")

    order = _zero_subgraph_order(net, canon)
    frames = horizon // period
    masks = {v: (1 if v in inputs else 0) for v in net.nodes}  # frame 0, sample bit 0
    responses: list[Response] = []
    first: int | None = None
    for t in range(1, frames + 1):
        current: dict[str, int] = {}
        for v in order:
            if v in inputs:
                current[v] = 1 << t
                continue
            acc = 0
            for u in net.predecessors[v]:
                source = current if canon[(u, v)] == 0 else masks
                acc |= source[u]
            current[v] = acc
        masks = current
        combined = 0
        for o in targets:
            combined |= masks[o]
        samples = tuple(i for i in range(t + 1) if combined >> i & 1)
        step = t * period
        responses.append(Response(step=step, frame=t, samples=samples))
        if first is None and samples:
            first = step
    return ResponseProfile(first, period, tuple(responses))


def _zero_subgraph_order(net: Network, pattern: Mapping) -> list[str]:
    """Topological order of the within-frame edges (valid patterns only)."""
    indegree = {v: 0 for v in net.nodes}
    succ: dict[str, list[str]] = {v: [] for v in net.nodes}
    for (u, v), bit in pattern.items():
        if bit == 0:
            succ[u].append(v)
            indegree[v] += 1
    ready = sorted((v for v, d in indegree.items() if d == 0), reverse=True)
    order: list[str] = []
    while ready:
        u = ready.pop()
        order.append(u)
        for w in succ[u]:
            indegree[w] -= 1
            if indegree[w] == 0:
                ready.append(w)
    if len(order) != len(net.nodes):
        raise InvalidPatternError("pattern leaves a cycle within a frame")
    return order


@dataclass(frozen=True)
class SweepRow:
    k: int
    streaming_first: int
    sequential_first: int
    difference: int

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "streaming_first": self.streaming_first,
            "sequential_first": self.sequential_first,
            "difference": self.difference,
        }


def dsr_sweep(outputs: Iterable[str] = ("O",)) -> list[SweepRow]:
    """First-response comparison across the whole deep-skip family.

    For every k the streaming pattern responds after the shortest-path
    length (4 steps) while the most-sequential pattern needs its full
    inference factor (4 + k steps), so the gap grows linearly with
    depth.
    """
    rows = []
    targets = tuple(outputs)
    for k in range(7):
        net = generate_dsr(k)
        horizon = 2 * (4 + k)
        streaming = response_profile(net, streaming_pattern(net), targets, horizon)
        sequential_pattern = most_sequential_patterns(net)[0]
        sequential = response_profile(net, sequential_pattern, targets, horizon)
        assert streaming.first_response_step is not None
        assert sequential.first_response_step is not None
        rows.append(SweepRow(
            k=k,
            streaming_first=streaming.first_response_step,
            sequential_first=sequential.first_response_step,
            difference=sequential.first_response_step - streaming.first_response_step,
        ))
    return rows


def sweep_to_csv(rows: Iterable[SweepRow]) -> str:
    lines = ["k,streaming_first,sequential_first,difference"]
    for r in rows:
        lines.append(f"{r.k},{r.streaming_first},{r.sequential_first},{r.difference}")
    return "\n".join(lines) + "\n"
