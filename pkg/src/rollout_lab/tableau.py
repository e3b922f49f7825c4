"""Update states and inference tableaus over rollout windows.

The initial state marks frame 0 and every input copy as available.
A synchronous update step switches on each node whose in-window
predecessors are all available. For a valid pattern this converges to
the full state, and the step at which a node switches on equals the
longest dependency path ending there, so the tableau can be computed
either by simulation or by a longest-path pass; both are exposed and
tested against each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import InvalidPatternError, NonConvergenceError
from .graph import Edge, Network, input_nodes
from .rollout import (
    Pattern,
    RolloutWindow,
    WindowNode,
    build_window,
    enumerate_valid_patterns,
    equally_model_parallel,
    is_valid,
    streaming_pattern,
)


def initial_state(window: RolloutWindow) -> frozenset[WindowNode]:
    """Frame-0 copies plus every input copy; the rest starts unavailable."""
    inputs = set(input_nodes(window.network))
    return frozenset((i, v) for i, v in window.nodes if i == 0 or v in inputs)


def full_state(window: RolloutWindow) -> frozenset[WindowNode]:
    return frozenset(window.nodes)


def update_step(window: RolloutWindow, state: frozenset[WindowNode]) -> frozenset[WindowNode]:
    """One synchronous step: a node switches on once all its predecessors are on.

    Inert frame-0 edge copies impose no dependency. Monotone by
    construction, so the result is always a superset of ``state``.
    """
    pred = window.active_in_edges
    fresh = [
        v for v in window.nodes
        if v not in state and all(u in state for u in pred[v])
    ]
    return state | frozenset(fresh)


def steps_to_full(window: RolloutWindow) -> int:
    """Number of update steps from the initial to the full state.

    On an invalid pattern the simulation stalls at a fixed point and a
    NonConvergenceError carrying the stuck nodes is raised instead of
    looping forever.
    """
    state = initial_state(window)
    target = full_state(window)
    steps = 0
    while state != target:
        advanced = update_step(window, state)
        if advanced == state:
            raise NonConvergenceError(target - state)
        state = advanced
        steps += 1
    return steps


def tableau_by_updates(window: RolloutWindow) -> dict[WindowNode, int]:
    """Tableau via simulation: each node's first update step (0 if initial)."""
    state = initial_state(window)
    tableau = {v: 0 for v in state}
    target = full_state(window)
    step = 0
    while state != target:
        advanced = update_step(window, state)
        if advanced == state:
            raise NonConvergenceError(target - state)
        step += 1
        for v in advanced - state:
            tableau[v] = step
        state = advanced
    return {v: tableau[v] for v in window.nodes}


def tableau_by_paths(window: RolloutWindow) -> dict[WindowNode, int]:
    """Tableau via longest dependency paths over the updating edges.

    Runs a topological pass; if that fails the window is cyclic, i.e.
    the pattern was invalid, and InvalidPatternError is raised.
    """
    pred = window.active_in_edges
    succ: dict[WindowNode, list[WindowNode]] = {v: [] for v in window.nodes}
    remaining = {v: len(pred[v]) for v in window.nodes}
    for tgt, sources in pred.items():
        for src in sources:
            succ[src].append(tgt)
    ready = [v for v in window.nodes if remaining[v] == 0]
    tableau = {v: 0 for v in window.nodes}
    ordered = 0
    while ready:
        u = ready.pop()
        ordered += 1
        for tgt in succ[u]:
            if tableau[u] + 1 > tableau[tgt]:
                tableau[tgt] = tableau[u] + 1
            remaining[tgt] -= 1
            if remaining[tgt] == 0:
                ready.append(tgt)
    if ordered != len(window.nodes):
        stuck = sorted(v for v in window.nodes if remaining[v] > 0)
        raise InvalidPatternError(
            f"window contains a cycle through {len(stuck)} node(s), e.g. "
            + ", ".join(f"({i},{v})" for i, v in stuck[:4]))
    return tableau


def inference_factor(net: Network, pattern: Pattern) -> int:
    """Update steps a size-1 window needs, the cost of one new frame.

    This is the maximum tableau value over the whole size-1 window;
    frame-0 copies sit at 0 and never decide it. Streaming gives 1.
    """
    if not is_valid(net, pattern):
        raise InvalidPatternError("inference factor is defined for valid patterns only")
    return max(tableau_by_paths(build_window(net, pattern, 1)).values())


@dataclass(frozen=True)
class Theorem1Report:
    """Four equivalent characterizations of maximal model-parallelism.

    a: the pattern agrees with streaming on every non-input-sourced edge.
    b: its inference factor is 1.
    c: every (i, v) in the checked window updates by step i.
    d: its tableau is pointwise minimal over all valid patterns
       (None when that enumeration was skipped).
    ``consistent`` says the evaluated predicates all agree.
    """

    equally_parallel: bool
    factor_one: bool
    frame_bound: bool
    pointwise_minimal: bool | None
    consistent: bool

    def as_dict(self) -> dict:
        return {
            "equally_parallel": self.equally_parallel,
            "factor_one": self.factor_one,
            "frame_bound": self.frame_bound,
            "pointwise_minimal": self.pointwise_minimal,
            "consistent": self.consistent,
        }


def _report(a: bool, b: bool, c: bool, d: bool | None) -> Theorem1Report:
    answers = {a, b, c} | ({d} if d is not None else set())
    return Theorem1Report(a, b, c, d, consistent=len(answers) == 1)


def _pointwise_minima(tableaus: list[dict[WindowNode, int]]) -> dict[WindowNode, int]:
    minima = dict(tableaus[0])
    for t in tableaus[1:]:
        for v, n in t.items():
            if n < minima[v]:
                minima[v] = n
    return minima


def theorem1_check(
    net: Network,
    pattern: Pattern,
    window_size: int,
    *,
    check_pointwise: bool = True,
    cap: int = 2 ** 24,
    force: bool = False,
    workers: int = 1,
) -> Theorem1Report:
    """Evaluate the four predicates for one valid pattern.

    Predicate d compares against the pointwise tableau minimum over all
    valid patterns, which costs a full enumeration; pass
    ``check_pointwise=False`` to skip it on larger networks.
    """
    if not is_valid(net, pattern):
        raise InvalidPatternError("theorem-1 predicates are defined for valid patterns only")
    a = equally_model_parallel(net, pattern, streaming_pattern(net))
    b = inference_factor(net, pattern) == 1
    tableau = tableau_by_paths(build_window(net, pattern, window_size))
    c = all(n <= i for (i, _), n in tableau.items())
    d = None
    if check_pointwise:
        others = enumerate_valid_patterns(net, cap=cap, force=force, workers=workers)
        minima = _pointwise_minima(
            [tableau_by_paths(build_window(net, p, window_size)) for p in others])
        d = tableau == minima
    return _report(a, b, c, d)


def theorem1_sweep(
    net: Network,
    window_size: int,
    *,
    cap: int = 2 ** 24,
    force: bool = False,
    workers: int = 1,
) -> list[tuple[dict[Edge, int], Theorem1Report]]:
    """Reports for every valid pattern, sharing one tableau enumeration.

    Equivalent to calling :func:`theorem1_check` per pattern but the
    pointwise minimum is computed once, so the sweep stays linear in the
    number of valid patterns.
    """
    patterns = enumerate_valid_patterns(net, cap=cap, force=force, workers=workers)
    tableaus = [tableau_by_paths(build_window(net, p, window_size)) for p in patterns]
    minima = _pointwise_minima(tableaus)
    streaming = streaming_pattern(net)
    results = []
    for pattern, tableau in zip(patterns, tableaus):
        a = equally_model_parallel(net, pattern, streaming)
        b = inference_factor(net, pattern) == 1
        c = all(n <= i for (i, _), n in tableau.items())
        d = tableau == minima
        results.append((pattern, _report(a, b, c, d)))
    return results


# ---------------------------------------------------------------------------
# exports


def tableau_to_json(window: RolloutWindow, tableau: Mapping[WindowNode, int]) -> str:
    import json

    doc = {
        "format_version": 1,
        "window_size": window.window_size,
        "steps": {f"({i},{v})": n for (i, v), n in tableau.items()},
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def tableau_to_dot(window: RolloutWindow, tableau: Mapping[WindowNode, int]) -> str:
    """DOT rendering of the window with each node labeled by its update step."""
    lines = ["digraph inference_tableau {", "  rankdir=LR;"]
    for frame in range(window.window_size + 1):
        lines.append(f"  subgraph cluster_frame_{frame} {{")
        lines.append(f'    label="frame {frame}";')
        for i, v in window.nodes:
            if i == frame:
                lines.append(f'    "{i}/{v}" [label="{v}\\n{tableau[(i, v)]}"];')
        lines.append("  }")
    for (i, u), (j, v) in window.edges:
        style = "solid" if j > i else "dashed"
        extra = ", color=gray" if ((i, u), (j, v)) in window.inert_edges else ""
        lines.append(f'  "{i}/{u}" -> "{j}/{v}" [style={style}{extra}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
