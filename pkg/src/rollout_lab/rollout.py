"""Rollout patterns over a network and the windows they unroll into.

A rollout pattern assigns every edge a bit: 1 lets the edge cross from
one frame to the next, 0 keeps it inside a frame. Unrolling a pattern
over frames 0..W yields the rollout window, a graph over (frame, node)
pairs. A pattern is valid exactly when its window is acyclic, which
happens exactly when the edges kept inside a frame form an acyclic
sub-graph. The all-ones (streaming) pattern is always valid.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

from .errors import (
    DomainMismatchError,
    EnumerationCapError,
    NetworkFormatError,
    WindowTooSmallError,
)
from .graph import Edge, Network, classify_edges, input_nodes, require_valid

Pattern = Mapping[Edge, int]
WindowNode = tuple[int, str]
WindowEdge = tuple[WindowNode, WindowNode]

DEFAULT_CANDIDATE_CAP = 2 ** 24


def require_same_domain(net: Network, pattern: Pattern) -> dict[Edge, int]:
    """Check that ``pattern`` covers exactly the network's edges with bits.

    Returns the pattern as a dict in canonical edge order. Raises
    DomainMismatchError on missing edges, unknown edges, or values
    outside {0, 1}.
    """
    keys = set(pattern)
    missing = sorted(net.edge_set - keys)
    extra = sorted(keys - net.edge_set)
    if missing or extra:
        parts = []
        if missing:
            parts.append("missing " + ", ".join(f"{u}->{v}" for u, v in missing[:4]))
        if extra:
            parts.append("unknown " + ", ".join(f"{u}->{v}" for u, v in extra[:4]))
        raise DomainMismatchError("pattern domain does not match edge set: " + "; ".join(parts))
    for e in net.edges:
        bit = pattern[e]
        if isinstance(bit, bool) or bit not in (0, 1):
            raise DomainMismatchError(f"pattern value for {e[0]}->{e[1]} must be 0 or 1, got {bit!r}")
    return {e: int(pattern[e]) for e in net.edges}


def streaming_pattern(net: Network) -> dict[Edge, int]:
    """The all-ones pattern, valid on every network."""
    require_valid(net)
    return {e: 1 for e in net.edges}


def is_valid(net: Network, pattern: Pattern) -> bool:
    """True when the edges assigned 0 form an acyclic sub-graph."""
    require_valid(net)
    canon = require_same_domain(net, pattern)
    zero_edges = [e for e, bit in canon.items() if bit == 0]
    return _acyclic(net.nodes, zero_edges)


def _acyclic(nodes: tuple[str, ...], edges: list[Edge]) -> bool:
    indegree = {v: 0 for v in nodes}
    succ: dict[str, list[str]] = {v: [] for v in nodes}
    for u, v in edges:
        succ[u].append(v)
        indegree[v] += 1
    ready = [v for v, d in indegree.items() if d == 0]
    seen = 0
    while ready:
        u = ready.pop()
        seen += 1
        for w in succ[u]:
            indegree[w] -= 1
            if indegree[w] == 0:
                ready.append(w)
    return seen == len(nodes)


@dataclass(frozen=True)
class RolloutWindow:
    """A pattern unrolled over frames 0..window_size.

    Edge copies landing in frames 1..window_size drive updates; the
    frame-0 copies of within-frame edges are kept for structure but
    inert, because frame 0 is initialization territory.
    """

    network: Network
    window_size: int
    pattern_items: tuple[tuple[Edge, int], ...]
    nodes: tuple[WindowNode, ...]
    edges: tuple[WindowEdge, ...]
    inert_edges: frozenset[WindowEdge]

    @cached_property
    def pattern(self) -> dict[Edge, int]:
        return dict(self.pattern_items)

    @cached_property
    def active_edges(self) -> tuple[WindowEdge, ...]:
        return tuple(e for e in self.edges if e not in self.inert_edges)

    @cached_property
    def active_in_edges(self) -> Mapping[WindowNode, tuple[WindowNode, ...]]:
        """Predecessors of each window node over the updating edges."""
        pred: dict[WindowNode, list[WindowNode]] = {v: [] for v in self.nodes}
        for src, tgt in self.active_edges:
            pred[tgt].append(src)
        return {v: tuple(sorted(us)) for v, us in pred.items()}


def build_window(net: Network, pattern: Pattern, window_size: int) -> RolloutWindow:
    """Unroll ``pattern`` over frames 0..window_size.

    The pattern does not have to be valid; an invalid one simply yields
    a window containing an intra-frame cycle. Each edge (u, v) produces
    the window edge ((i, u), (i + bit, v)) for every frame i where the
    target still lies inside the window.
    """
    require_valid(net)
    canon = require_same_domain(net, pattern)
    if window_size < 1:
        raise WindowTooSmallError(f"window_size must be >= 1, got {window_size}")
    nodes = tuple((i, v) for i in range(window_size + 1) for v in net.nodes)
    edges: list[WindowEdge] = []
    inert: list[WindowEdge] = []
    for (u, v), bit in canon.items():
        for i in range(window_size + 1):
            j = i + bit
            if j > window_size:
                continue
            copy = ((i, u), (j, v))
            edges.append(copy)
            if j == 0:
                inert.append(copy)
    return RolloutWindow(
        network=net,
        window_size=window_size,
        pattern_items=tuple(canon.items()),
        nodes=nodes,
        edges=tuple(sorted(edges)),
        inert_edges=frozenset(inert),
    )


def enumerate_valid_patterns(
    net: Network,
    *,
    cap: int = DEFAULT_CANDIDATE_CAP,
    force: bool = False,
    workers: int = 1,
) -> list[dict[Edge, int]]:
    """All valid patterns, as binary counters over the non-self-loop edges.

    Self-loops are pinned to 1 (a within-frame self-loop is always a
    cycle), so candidate index c assigns bit (c >> k) & 1 to the k-th
    remaining edge in canonical order. The result is sorted by candidate
    index, which makes pattern indices stable across runs and worker
    counts.

    Raises EnumerationCapError when the candidate count 2**m exceeds
    ``cap`` and ``force`` is not set.
    """
    require_valid(net)
    free = [e for e in net.edges if e[0] != e[1]]
    m = len(free)
    total = 1 << m
    if total > cap and not force:
        raise EnumerationCapError(
            f"2**{m} = {total} candidates exceed the cap of {cap}; pass force to override", cap)

    index = {v: i for i, v in enumerate(net.nodes)}
    int_edges = [(index[u], index[v]) for u, v in free]
    n = len(net.nodes)

    def chunk(lo: int, hi: int) -> list[int]:
        hits = []
        for c in range(lo, hi):
            indegree = [0] * n
            succ: list[list[int]] = [[] for _ in range(n)]
            for k, (ui, vi) in enumerate(int_edges):
                if not (c >> k) & 1:
                    succ[ui].append(vi)
                    indegree[vi] += 1
            ready = [v for v in range(n) if indegree[v] == 0]
            seen = 0
            while ready:
                u = ready.pop()
                seen += 1
                for w in succ[u]:
                    indegree[w] -= 1
                    if indegree[w] == 0:
                        ready.append(w)
            if seen == n:
                hits.append(c)
        return hits

    if workers > 1 and total >= workers:
        step = -(-total // workers)
        ranges = [(lo, min(lo + step, total)) for lo in range(0, total, step)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda r: chunk(*r), ranges))
        valid = [c for part in parts for c in part]
    else:
        valid = chunk(0, total)

    loops = {e: 1 for e in net.edges if e[0] == e[1]}
    out: list[dict[Edge, int]] = []
    for c in valid:
        assigned = dict(loops)
        for k, e in enumerate(free):
            assigned[e] = (c >> k) & 1
        out.append({e: assigned[e] for e in net.edges})
    return out


def most_sequential_patterns(
    net: Network,
    *,
    cap: int = DEFAULT_CANDIDATE_CAP,
    force: bool = False,
    workers: int = 1,
) -> list[dict[Edge, int]]:
    """Valid patterns with the most within-frame edges.

    More than one pattern can tie (any long cycle must leave exactly one
    edge crossing, and which one is free), so a list comes back, in
    enumeration order. When the non-self-loop edges already form a DAG
    the answer is the single pattern keeping all of them within-frame,
    returned without enumerating.
    """
    require_valid(net)
    free = [e for e in net.edges if e[0] != e[1]]
    if _acyclic(net.nodes, free):
        return [{e: (0 if e[0] != e[1] else 1) for e in net.edges}]
    patterns = enumerate_valid_patterns(net, cap=cap, force=force, workers=workers)
    zeros = [sum(1 for bit in p.values() if bit == 0) for p in patterns]
    best = max(zeros)
    return [p for p, z in zip(patterns, zeros) if z == best]


@dataclass(frozen=True)
class Lemma1Bounds:
    """Bounds on the number of valid patterns.

    lower_forward counts free choice over the edges on no cycle;
    lower_cycle multiplies (2**len - 1) over an edge-disjoint set of
    minimal cycles; both are attainable lower bounds, the maximum is
    reported as ``lower``. ``upper`` is 2**(|E| - #self-loops) and
    ``exact_count`` comes from full enumeration when requested.
    """

    lower_forward: int
    lower_cycle: int
    lower: int
    upper: int
    exact_count: int | None


def lemma1_bounds(
    net: Network,
    *,
    include_exact: bool = False,
    cycle_cap: int = 100_000,
    cap: int = DEFAULT_CANDIDATE_CAP,
    force: bool = False,
    workers: int = 1,
) -> Lemma1Bounds:
    analysis = classify_edges(net, cycle_cap)
    lower_forward = 1 << len(analysis.forward_edges)
    lower_cycle = 1
    for p in analysis.disjoint_cycle_set:
        lower_cycle *= (1 << p.length) - 1
    upper = 1 << (len(net.edges) - len(analysis.recurrent_edges))
    exact = None
    if include_exact:
        exact = len(enumerate_valid_patterns(net, cap=cap, force=force, workers=workers))
    return Lemma1Bounds(
        lower_forward=lower_forward,
        lower_cycle=lower_cycle,
        lower=max(lower_forward, lower_cycle),
        upper=upper,
        exact_count=exact,
    )


def equally_model_parallel(net: Network, a: Pattern, b: Pattern) -> bool:
    """True when the two patterns agree on every edge not leaving an input node.

    Edges out of input nodes never matter for update timing, because
    input copies hold externally supplied values in every frame.
    """
    ca = require_same_domain(net, a)
    cb = require_same_domain(net, b)
    inputs = set(input_nodes(net))
    return all(ca[e] == cb[e] for e in net.edges if e[0] not in inputs)


# ---------------------------------------------------------------------------
# pattern files and DOT export


def parse_pattern_json(text: str) -> dict[Edge, int]:
    """Parse ``{"edges": {"src->tgt": 0|1, ...}}`` into a pattern dict."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from exc
    if not isinstance(doc, dict):
        raise NetworkFormatError("pattern JSON must be an object")
    if doc.get("format_version", 1) != 1:
        raise NetworkFormatError(f"unsupported format_version {doc.get('format_version')!r}")
    unknown = sorted(set(doc) - {"format_version", "edges"})
    if unknown:
        raise NetworkFormatError(f"unknown key(s): {', '.join(map(str, unknown))}")
    entries = doc.get("edges")
    if not isinstance(entries, dict):
        raise NetworkFormatError("'edges' must be an object keyed by 'src->tgt'")
    pattern: dict[Edge, int] = {}
    for key, value in entries.items():
        parts = key.split("->")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise NetworkFormatError(f"bad edge key {key!r}, expected 'src->tgt'")
        if isinstance(value, bool) or value not in (0, 1):
            raise NetworkFormatError(f"bad value for {key!r}: {value!r} is not 0 or 1")
        pattern[(parts[0], parts[1])] = value
    return dict(sorted(pattern.items()))


def pattern_to_json(pattern: Pattern) -> str:
    doc = {
        "format_version": 1,
        "edges": {f"{u}->{v}": int(bit) for (u, v), bit in sorted(pattern.items())},
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def window_to_dot(window: RolloutWindow) -> str:
    """Render a window as DOT: one cluster per frame, crossing edges solid,
    within-frame edges dashed, inert frame-0 copies grayed out."""
    lines = ["digraph rollout_window {", "  rankdir=LR;"]
    for frame in range(window.window_size + 1):
        lines.append(f"  subgraph cluster_frame_{frame} {{")
        lines.append(f'    label="frame {frame}";')
        for i, v in window.nodes:
            if i == frame:
                lines.append(f'    "{i}/{v}" [label="{v}"];')
        lines.append("  }")
    for (i, u), (j, v) in window.edges:
        style = "solid" if j > i else "dashed"
        extra = ", color=gray" if ((i, u), (j, v)) in window.inert_edges else ""
        lines.append(f'  "{i}/{u}" -> "{j}/{v}" [style={style}{extra}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
