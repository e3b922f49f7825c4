"""Directed networks of computation stages, their cycles, and generators.

A network is a finite simple digraph. Nodes are named stages, edges are
the transformations between them, and self-loops are allowed. Input
nodes are the nodes without incoming edges; a well-formed network has at
least one input node and every node reachable from the input set.

The module also owns the two interchange formats for networks: a line
oriented text format (``node <name>`` / ``edge <src> <tgt>`` directives,
``#`` comments) and an equivalent JSON form.
"""

from __future__ import annotations

import json
import re
from collections import Counter, deque
from dataclasses import dataclass
from functools import cached_property
from random import Random
from typing import Iterable, Mapping

from .errors import (
    EnumerationCapError,
    InvalidNetworkError,
    NetworkFormatError,
    NoInputOutputPathError,
)

Edge = tuple[str, str]

DEFAULT_CYCLE_CAP = 100_000

_NAME_RE = re.compile(r"[A-Za-z0-9_]+\Z")


def _check_name(name: object) -> str:
    if not isinstance(name, str) or not _NAME_RE.match(name):
        raise ValueError(f"node names must match [A-Za-z0-9_]+, got {name!r}")
    return name


@dataclass(frozen=True)
class Network:
    """Immutable directed graph with named nodes.

    ``nodes`` is stored sorted and duplicate free. ``edges`` is stored
    sorted but otherwise as given, so a duplicated or dangling edge
    survives construction and is reported by :func:`validate_network`
    rather than silently repaired.
    """

    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self) -> None:
        nodes = tuple(sorted({_check_name(v) for v in self.nodes}))
        edges = tuple(sorted((_check_name(u), _check_name(v)) for u, v in self.edges))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)

    @cached_property
    def edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edges)

    @cached_property
    def successors(self) -> Mapping[str, tuple[str, ...]]:
        """Adjacency over declared nodes; edges touching undeclared names are skipped."""
        succ: dict[str, list[str]] = {v: [] for v in self.nodes}
        for u, v in self.edges:
            if u in succ and v in succ:
                succ[u].append(v)
        return {u: tuple(sorted(set(vs))) for u, vs in succ.items()}

    @cached_property
    def predecessors(self) -> Mapping[str, tuple[str, ...]]:
        pred: dict[str, list[str]] = {v: [] for v in self.nodes}
        for u, v in self.edges:
            if u in pred and v in pred:
                pred[v].append(u)
        return {v: tuple(sorted(set(us))) for v, us in pred.items()}


def input_nodes(net: Network) -> tuple[str, ...]:
    """Nodes without incoming edges, sorted. A self-loop disqualifies its node."""
    targets = {v for _, v in net.edges}
    return tuple(v for v in net.nodes if v not in targets)


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    subject: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    issues: tuple[ValidationIssue, ...]


def validate_network(net: Network) -> ValidationReport:
    """Check well-formedness and return every violation instead of raising.

    Issue codes: ``EmptyEdgeSet``, ``DuplicateEdge``, ``UndeclaredEndpoint``,
    ``NoInputNode``, ``NotInputConnected``.
    """
    issues: list[ValidationIssue] = []
    if not net.edges:
        issues.append(ValidationIssue("EmptyEdgeSet", "", "the edge set is empty"))
    for edge, count in sorted(Counter(net.edges).items()):
        if count > 1:
            issues.append(ValidationIssue(
                "DuplicateEdge", f"{edge[0]}->{edge[1]}",
                f"edge {edge[0]}->{edge[1]} appears {count} times"))
    declared = set(net.nodes)
    dangling = sorted({w for e in set(net.edges) for w in e if w not in declared})
    for name in dangling:
        issues.append(ValidationIssue(
            "UndeclaredEndpoint", name, f"edge endpoint {name} is not a declared node"))
    inputs = input_nodes(net)
    if not inputs:
        issues.append(ValidationIssue("NoInputNode", "", "no node is free of incoming edges"))
    reached = set(inputs)
    queue = deque(inputs)
    while queue:
        for w in net.successors.get(queue.popleft(), ()):
            if w not in reached:
                reached.add(w)
                queue.append(w)
    for v in net.nodes:
        if v not in reached:
            issues.append(ValidationIssue(
                "NotInputConnected", v, f"node {v} is unreachable from the input set"))
    return ValidationReport(ok=not issues, issues=tuple(issues))


def require_valid(net: Network) -> Network:
    report = validate_network(net)
    if not report.ok:
        raise InvalidNetworkError(report)
    return net


@dataclass(frozen=True)
class Path:
    """A walk given as a chained edge sequence.

    ``is_minimal`` means no edge repeats; ``is_cycle`` means the walk
    returns to its starting node.
    """

    edges: tuple[Edge, ...]

    def __post_init__(self) -> None:
        if not self.edges:
            raise ValueError("a path needs at least one edge")
        for (_, a), (b, _) in zip(self.edges, self.edges[1:]):
            if a != b:
                raise ValueError(f"edges do not chain: ...{a}) followed by ({b}...")

    @property
    def length(self) -> int:
        return len(self.edges)

    @property
    def is_cycle(self) -> bool:
        return self.edges[-1][1] == self.edges[0][0]

    @property
    def is_minimal(self) -> bool:
        return len(set(self.edges)) == len(self.edges)

    def node_sequence(self) -> tuple[str, ...]:
        return tuple(e[0] for e in self.edges) + (self.edges[-1][1],)


def minimal_cycles(net: Network, cap: int = DEFAULT_CYCLE_CAP) -> list[Path]:
    """Enumerate the elementary cycles of ``net``.

    Each cycle is returned exactly once, rotated to start at its
    smallest node, and the list is sorted by (length, node sequence).
    Cycles are found by a DFS rooted at each node in turn that only
    visits larger nodes, so the root is always the smallest node of
    every cycle it reports.

    Raises
    ------
    EnumerationCapError
        If more than ``cap`` cycles exist.
    InvalidNetworkError
        If the network fails validation.
    """
    require_valid(net)
    rank = {v: i for i, v in enumerate(net.nodes)}
    cycles: list[Path] = []
    for root in net.nodes:
        path_nodes = [root]
        path_edges: list[Edge] = []
        on_path = {root}
        stack = [iter(net.successors[root])]
        while stack:
            for w in stack[-1]:
                if rank[w] < rank[root]:
                    continue
                if w == root:
                    cycles.append(Path(tuple(path_edges) + ((path_nodes[-1], root),)))
                    if len(cycles) > cap:
                        raise EnumerationCapError(
                            f"more than {cap} elementary cycles", cap)
                elif w not in on_path:
                    path_edges.append((path_nodes[-1], w))
                    path_nodes.append(w)
                    on_path.add(w)
                    stack.append(iter(net.successors[w]))
                    break
            else:
                stack.pop()
                on_path.discard(path_nodes.pop())
                if path_edges:
                    path_edges.pop()
    cycles.sort(key=lambda p: (p.length, p.node_sequence()))
    return cycles


@dataclass(frozen=True)
class CycleAnalysis:
    """Edge classification of a network.

    ``recurrent_edges`` are the self-loops, ``forward_edges`` the edges
    lying on no cycle at all, and ``disjoint_cycle_set`` a greedily
    chosen pairwise edge-disjoint subset of the minimal cycles (shortest
    first, ties broken by node sequence; no optimality claim).
    """

    recurrent_edges: tuple[Edge, ...]
    forward_edges: tuple[Edge, ...]
    minimal_cycles: tuple[Path, ...]
    disjoint_cycle_set: tuple[Path, ...]


def classify_edges(net: Network, cap: int = DEFAULT_CYCLE_CAP) -> CycleAnalysis:
    cycles = minimal_cycles(net, cap)
    on_cycle: set[Edge] = set()
    for p in cycles:
        on_cycle.update(p.edges)
    recurrent = tuple(e for e in net.edges if e[0] == e[1])
    forward = tuple(sorted(net.edge_set - on_cycle))
    chosen: list[Path] = []
    used: set[Edge] = set()
    for p in cycles:
        if used.isdisjoint(p.edges):
            chosen.append(p)
            used.update(p.edges)
    return CycleAnalysis(recurrent, forward, tuple(cycles), tuple(chosen))


def io_path_extremes(net: Network, outputs: Iterable[str]) -> tuple[int, int]:
    """Shortest and longest input-to-output path lengths, in edges.

    The longest length ranges over simple paths (no node revisited, so a
    self-loop never pads a route); the shortest is a plain BFS distance.
    An output that is itself an input contributes length 0. Worst case
    exponential in the node count, intended for small networks.

    Raises NoInputOutputPathError when no output is reachable from the
    input set.
    """
    require_valid(net)
    targets = set(outputs)
    if not targets:
        raise ValueError("outputs must be non-empty")
    unknown = sorted(targets - set(net.nodes))
    if unknown:
        raise ValueError(f"unknown output node(s): {', '.join(unknown)}")

    inputs = input_nodes(net)
    dist: dict[str, int] = {v: 0 for v in inputs}
    queue = deque(inputs)
    while queue:
        u = queue.popleft()
        for w in net.successors[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    reachable = [dist[o] for o in sorted(targets) if o in dist]
    if not reachable:
        raise NoInputOutputPathError(
            f"no path from inputs {{{', '.join(inputs)}}} to outputs {{{', '.join(sorted(targets))}}}")
    shortest = min(reachable)

    longest = -1

    def extend(v: str, length: int, visited: set[str]) -> None:
        nonlocal longest
        if v in targets and length > longest:
            longest = length
        for w in net.successors[v]:
            if w not in visited:
                visited.add(w)
                extend(w, length + 1, visited)
                visited.discard(w)

    for s in inputs:
        extend(s, 0, {s})
    return shortest, longest


_DSR_BASE_NODES = ("I", "H1", "H2", "HD", "O")
_DSR_INSERTION_ORDER = ("H11", "H21", "H12", "H22", "H13", "H23")
_DSR_FULL_EDGES: tuple[Edge, ...] = (
    ("I", "H1"),
    ("H1", "H1"),
    # block 1 chain and its skips, feeding H2
    ("H1", "H11"), ("H11", "H12"), ("H12", "H13"), ("H13", "H2"),
    ("H1", "H12"), ("H1", "H13"), ("H1", "H2"),
    ("H11", "H13"), ("H11", "H2"), ("H12", "H2"),
    # block 2 chain and its skips, feeding HD
    ("H2", "H21"), ("H21", "H22"), ("H22", "H23"), ("H23", "HD"),
    ("H2", "H22"), ("H2", "H23"), ("H2", "HD"),
    ("H21", "H23"), ("H21", "HD"), ("H22", "HD"),
    ("HD", "O"),
)


def generate_dsr(k: int) -> Network:
    """The k-th member of the deep-skip-recurrent family, k in 0..6.

    DSR0 is the chain I -> H1 -> H2 -> HD -> O with a self-loop on H1.
    Each step inserts one hidden layer (H11, H21, H12, H22, H13, H23 in
    that order) together with all skip edges among the present layers,
    so DSRk is a sub-network of DSR(k+1), the shortest input-output path
    stays at 4, and the longest grows to 4+k.
    """
    if not 0 <= k <= 6:
        raise ValueError(f"k must be in 0..6, got {k}")
    nodes = _DSR_BASE_NODES + _DSR_INSERTION_ORDER[:k]
    present = set(nodes)
    edges = tuple(e for e in _DSR_FULL_EDGES if e[0] in present and e[1] in present)
    return Network(nodes, edges)


def generate_random(node_count: int, edge_probability: float, seed: int) -> Network:
    """Seeded random network with one designated input node.

    Every ordered pair not pointing at the input is kept with the given
    probability (self-loops included). Nodes left unreachable from the
    input are then wired back in with direct edges from it, so the
    result always validates and carries at least one edge.
    """
    if node_count < 2:
        raise ValueError("node_count must be at least 2")
    if not 0.0 <= edge_probability <= 1.0:
        raise ValueError("edge_probability must lie in [0, 1]")
    rng = Random(seed)
    names = [f"n{i:02d}" for i in range(node_count)]
    root = names[0]
    edges = [
        (u, v)
        for u in names
        for v in names
        if v != root and rng.random() < edge_probability
    ]
    while True:
        reached = {root}
        queue = deque([root])
        succ: dict[str, list[str]] = {v: [] for v in names}
        for u, v in edges:
            succ[u].append(v)
        while queue:
            for w in succ[queue.popleft()]:
                if w not in reached:
                    reached.add(w)
                    queue.append(w)
        missing = [v for v in names if v not in reached]
        if not missing:
            break
        edges.append((root, missing[0]))
    return Network(tuple(names), tuple(edges))


def sink_nodes(net: Network) -> tuple[str, ...]:
    """Nodes with no outgoing edge to another node (self-loops ignored)."""
    non_sink = {u for u, v in net.edges if u != v}
    return tuple(v for v in net.nodes if v not in non_sink)


# ---------------------------------------------------------------------------
# file formats


def parse_network_text(text: str) -> Network:
    """Parse the line-oriented network format.

    Directives are ``node <name>`` and ``edge <src> <tgt>``, one per
    line; ``#`` starts a comment; names match [A-Za-z0-9_]+. Repeating
    a node directive is harmless, repeating an edge is a format error.
    """
    nodes: list[str] = []
    edges: list[Edge] = []
    seen: set[Edge] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        for name in parts[1:]:
            if not _NAME_RE.match(name):
                raise NetworkFormatError(
                    f"bad name {name!r}", lineno, raw.find(name) + 1)
        if parts[0] == "node" and len(parts) == 2:
            nodes.append(parts[1])
        elif parts[0] == "edge" and len(parts) == 3:
            e = (parts[1], parts[2])
            if e in seen:
                raise NetworkFormatError(f"duplicate edge {e[0]} {e[1]}", lineno, 1)
            seen.add(e)
            edges.append(e)
        else:
            raise NetworkFormatError(
                f"expected 'node <name>' or 'edge <src> <tgt>', got {line!r}", lineno, 1)
    return Network(tuple(nodes), tuple(edges))


def network_to_text(net: Network) -> str:
    lines = [f"node {v}" for v in net.nodes]
    lines += [f"edge {u} {v}" for u, v in net.edges]
    return "\n".join(lines) + "\n"


def parse_network_json(text: str) -> Network:
    """Parse the JSON network form ``{"nodes": [...], "edges": [[src, tgt], ...]}``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from exc
    if not isinstance(doc, dict):
        raise NetworkFormatError("network JSON must be an object")
    version = doc.get("format_version", 1)
    if version != 1:
        raise NetworkFormatError(f"unsupported format_version {version!r}")
    unknown = sorted(set(doc) - {"format_version", "nodes", "edges"})
    if unknown:
        raise NetworkFormatError(f"unknown key(s): {', '.join(map(str, unknown))}")
    nodes = doc.get("nodes")
    edges = doc.get("edges")
    if not isinstance(nodes, list) or not all(isinstance(v, str) for v in nodes):
        raise NetworkFormatError("'nodes' must be a list of strings")
    if not isinstance(edges, list):
        raise NetworkFormatError("'edges' must be a list of [src, tgt] pairs")
    pairs: list[Edge] = []
    for item in edges:
        if not (isinstance(item, list) and len(item) == 2
                and all(isinstance(x, str) for x in item)):
            raise NetworkFormatError(f"bad edge entry {item!r}")
        pairs.append((item[0], item[1]))
    dups = sorted(e for e, n in Counter(pairs).items() if n > 1)
    if dups:
        raise NetworkFormatError(f"duplicate edge {dups[0][0]} {dups[0][1]}")
    try:
        return Network(tuple(nodes), tuple(pairs))
    except ValueError as exc:
        raise NetworkFormatError(str(exc)) from exc


def network_to_json(net: Network) -> str:
    doc = {
        "format_version": 1,
        "nodes": list(net.nodes),
        "edges": [list(e) for e in net.edges],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def parse_network(text: str) -> Network:
    """Parse either format, sniffing JSON by a leading ``{``."""
    if text.lstrip().startswith("{"):
        return parse_network_json(text)
    return parse_network_text(text)
