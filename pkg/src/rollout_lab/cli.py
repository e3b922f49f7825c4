"""Command line interface.

Nine subcommands over network files: validate, analyze, enumerate,
tableau, theorem1, schedule, respond, exec, dsr-sweep. All primary
output is written to stdout (or --out) and is byte-stable across runs;
diagnostics go to stderr. Exit codes: 0 success, 1 domain errors
(invalid pattern, cap exceeded, failed validation), 2 I/O and parse
errors. The only environment variable honored is ROLLOUT_LAB_THREADS,
the worker count for pattern enumeration.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import executor, graph, rollout, scheduler, tableau
from .errors import NetworkFormatError, RolloutLabError


def _dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _edge_str(e: graph.Edge) -> str:
    return f"{e[0]}->{e[1]}"


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_network(path: str) -> graph.Network:
    return graph.parse_network(_read(path))


def _load_pattern(net: graph.Network, value: str, workers: int = 1) -> dict:
    """Resolve --pattern: the keywords streaming / most-sequential, or a file."""
    if value == "streaming":
        return rollout.streaming_pattern(net)
    if value == "most-sequential":
        candidates = rollout.most_sequential_patterns(net, workers=workers)
        if len(candidates) > 1:
            print(f"note: {len(candidates)} most-sequential patterns tie; using the first",
                  file=sys.stderr)
        return candidates[0]
    pattern = rollout.parse_pattern_json(_read(value))
    return rollout.require_same_domain(net, pattern)


def _workers() -> int:
    raw = os.environ.get("ROLLOUT_LAB_THREADS")
    if raw is None:
        return 1
    try:
        count = int(raw)
    except ValueError:
        count = 0
    if count < 1:
        raise RolloutLabError(f"ROLLOUT_LAB_THREADS must be a positive integer, got {raw!r}")
    return count


def _outputs_arg(raw: str) -> tuple[str, ...]:
    names = tuple(s for s in (part.strip() for part in raw.split(",")) if s)
    if not names:
        raise RolloutLabError("--outputs needs at least one node name")
    return names


# ---------------------------------------------------------------------------
# command handlers; each returns (output_text, exit_code)


def _cmd_validate(args) -> tuple[str, int]:
    net = _load_network(args.net)
    report = graph.validate_network(net)
    doc = {
        "format_version": 1,
        "ok": report.ok,
        "issues": [
            {"code": i.code, "subject": i.subject, "message": i.message}
            for i in report.issues
        ],
    }
    return _dumps(doc), 0 if report.ok else 1


def _cmd_analyze(args) -> tuple[str, int]:
    net = _load_network(args.net)
    analysis = graph.classify_edges(net)
    bounds = rollout.lemma1_bounds(
        net, include_exact=args.exact, force=args.force, workers=_workers())
    doc = {
        "format_version": 1,
        "node_count": len(net.nodes),
        "edge_count": len(net.edges),
        "input_nodes": list(graph.input_nodes(net)),
        "recurrent_edges": [_edge_str(e) for e in analysis.recurrent_edges],
        "forward_edges": [_edge_str(e) for e in analysis.forward_edges],
        "minimal_cycles": [[_edge_str(e) for e in p.edges] for p in analysis.minimal_cycles],
        "disjoint_cycle_set": [[_edge_str(e) for e in p.edges] for p in analysis.disjoint_cycle_set],
        "bounds": {
            "lower_forward": bounds.lower_forward,
            "lower_cycle": bounds.lower_cycle,
            "lower": bounds.lower,
            "upper": bounds.upper,
            "exact_count": bounds.exact_count,
        },
    }
    if args.outputs:
        shortest, longest = graph.io_path_extremes(net, args.outputs)
        doc["path_extremes"] = {"shortest": shortest, "longest": longest}
    return _dumps(doc), 0


def _cmd_enumerate(args) -> tuple[str, int]:
    net = _load_network(args.net)
    workers = _workers()
    if args.most_sequential:
        patterns = rollout.most_sequential_patterns(net, force=args.force, workers=workers)
    else:
        patterns = rollout.enumerate_valid_patterns(net, force=args.force, workers=workers)
    free = [e for e in net.edges if e[0] != e[1]]
    entries = []
    for p in patterns:
        index = sum(p[e] << k for k, e in enumerate(free))
        entries.append({"index": index, "edges": {_edge_str(e): bit for e, bit in p.items()}})
    doc = {"format_version": 1, "count": len(patterns), "patterns": entries}
    return _dumps(doc), 0


def _cmd_tableau(args) -> tuple[str, int]:
    net = _load_network(args.net)
    pattern = _load_pattern(net, args.pattern, _workers())
    window = rollout.build_window(net, pattern, args.window)
    if args.method == "updates":
        steps = tableau.tableau_by_updates(window)
    else:
        steps = tableau.tableau_by_paths(window)
    if args.format == "dot":
        return tableau.tableau_to_dot(window, steps), 0
    return tableau.tableau_to_json(window, steps), 0


def _cmd_theorem1(args) -> tuple[str, int]:
    net = _load_network(args.net)
    workers = _workers()
    pattern = _load_pattern(net, args.pattern, workers)
    report = tableau.theorem1_check(
        net, pattern, args.window,
        check_pointwise=not args.skip_pointwise,
        force=args.force, workers=workers)
    doc = {"format_version": 1, "window_size": args.window, **report.as_dict()}
    return _dumps(doc), 0


def _cmd_schedule(args) -> tuple[str, int]:
    net = _load_network(args.net)
    pattern = _load_pattern(net, args.pattern, _workers())
    window = rollout.build_window(net, pattern, args.window)
    costs = None
    if args.costs:
        costs = _parse_costs(_read(args.costs))
    profile = scheduler.parallelism_profile(window)
    report = scheduler.weighted_makespan(window, costs, args.parallel_limit)
    doc = {
        "format_version": 1,
        "window_size": args.window,
        "profile": profile.as_dict(),
        "makespan": report.as_dict(),
    }
    return _dumps(doc), 0


def _parse_costs(text: str) -> scheduler.CostModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from exc
    if not isinstance(doc, dict):
        raise NetworkFormatError("cost file must be a JSON object")
    if doc.get("format_version", 1) != 1:
        raise NetworkFormatError(f"unsupported format_version {doc.get('format_version')!r}")
    entries = doc.get("node_cost", {k: v for k, v in doc.items() if k != "format_version"})
    if not isinstance(entries, dict) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in entries.values()):
        raise NetworkFormatError("costs must map node names to numbers")
    try:
        return scheduler.CostModel({k: float(v) for k, v in entries.items()})
    except ValueError as exc:
        raise RolloutLabError(str(exc)) from exc


def _cmd_respond(args) -> tuple[str, int]:
    net = _load_network(args.net)
    pattern = _load_pattern(net, args.pattern, _workers())
    profile = scheduler.response_profile(net, pattern, args.outputs, args.horizon)
    doc = {"format_version": 1, **profile.as_dict()}
    return _dumps(doc), 0


def _cmd_exec(args) -> tuple[str, int]:
    net = _load_network(args.net)
    pattern = _load_pattern(net, args.pattern, _workers())
    if args.numeric_spec:
        spec = executor.parse_numeric_spec_json(_read(args.numeric_spec))
    else:
        spec = executor.random_numeric_spec(net, args.seed, dims=args.dim)
    sequence = executor.parse_input_sequence(_read(args.inputs))
    if args.window is not None:
        trace = executor.execute_window(net, pattern, args.window, spec, sequence)
        return _dumps(trace.as_dict()), 0
    responses = executor.execute_stream(
        net, pattern, spec, sequence, args.stream_steps, outputs=args.outputs)
    doc = {
        "format_version": 1,
        "responses": [
            {
                "step": r.step,
                "frame": r.frame,
                "values": {name: [float(x) for x in vec] for name, vec in sorted(r.values.items())},
            }
            for r in responses
        ],
    }
    return _dumps(doc), 0


def _cmd_dsr_sweep(args) -> tuple[str, int]:
    rows = scheduler.dsr_sweep(args.outputs)
    if args.format == "json":
        return _dumps({"format_version": 1, "rows": [r.as_dict() for r in rows]}), 0
    return scheduler.sweep_to_csv(rows), 0


# ---------------------------------------------------------------------------
# parser wiring


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rollout-lab",
        description="Analyze rollout patterns of cyclic computation graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, handler, help_text: str, *, net=True, pattern=False, window=False):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=handler)
        if net:
            p.add_argument("--net", required=True, help="network file (text or JSON)")
        if pattern:
            p.add_argument("--pattern", default="streaming",
                           help="pattern file, or 'streaming' / 'most-sequential' (default: streaming)")
        if window:
            p.add_argument("--window", type=int, required=True, help="window size W >= 1")
        p.add_argument("--out", help="write primary output to this file instead of stdout")
        return p

    add("validate", _cmd_validate, "check a network file and report violations")

    p = add("analyze", _cmd_analyze, "edge classes, cycles, and pattern-count bounds")
    p.add_argument("--outputs", type=_outputs_arg, help="comma separated outputs for path extremes")
    p.add_argument("--exact", action="store_true", help="enumerate the exact valid-pattern count")
    p.add_argument("--force", action="store_true", help="override the enumeration cap")

    p = add("enumerate", _cmd_enumerate, "list all valid rollout patterns")
    p.add_argument("--most-sequential", action="store_true",
                   help="only the patterns with the most within-frame edges")
    p.add_argument("--force", action="store_true", help="override the enumeration cap")

    p = add("tableau", _cmd_tableau, "inference tableau of a pattern's window",
            pattern=True, window=True)
    p.add_argument("--method", choices=("paths", "updates"), default="paths")
    p.add_argument("--format", choices=("json", "dot"), default="json")

    p = add("theorem1", _cmd_theorem1, "the four model-parallelism predicates",
            pattern=True, window=True)
    p.add_argument("--skip-pointwise", action="store_true",
                   help="skip the enumeration-heavy pointwise-minimality predicate")
    p.add_argument("--force", action="store_true", help="override the enumeration cap")

    p = add("schedule", _cmd_schedule, "parallelism profile and makespan of a window",
            pattern=True, window=True)
    p.add_argument("--costs", help="JSON file with per-node costs")
    p.add_argument("--parallel-limit", type=int, help="bound the worker count (list scheduling)")

    p = add("respond", _cmd_respond, "response timing under carry-over streaming",
            pattern=True)
    p.add_argument("--outputs", type=_outputs_arg, required=True,
                   help="comma separated output nodes")
    p.add_argument("--horizon", type=int, required=True, help="update steps to simulate")

    p = add("exec", _cmd_exec, "numerically execute a window or a stream", pattern=True)
    p.add_argument("--inputs", required=True, help="JSON array of per-frame input maps")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--window", type=int, help="evaluate one window of this size")
    mode.add_argument("--stream-steps", type=int, help="run a carry-over stream this many steps")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--numeric-spec", help="JSON parameter file")
    source.add_argument("--seed", type=int,
                        help="draw uniform [-1,1] parameters from this seed instead")
    p.add_argument("--dim", type=int, default=2,
                   help="node dimension for seeded parameters (default 2)")
    p.add_argument("--outputs", type=_outputs_arg, help="stream outputs (default: sink nodes)")

    p = add("dsr-sweep", _cmd_dsr_sweep, "first-response table for the DSR family", net=False)
    p.add_argument("--outputs", type=_outputs_arg, default=("O",))
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        output, code = args.func(args)
    except NetworkFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RolloutLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.out:
            Path(args.out).write_text(output, encoding="utf-8")
        else:
            sys.stdout.write(output)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return code


if __name__ == "__main__":
    sys.exit(main())
