"""Network construction, validation, cycle analysis, and the file formats."""

from __future__ import annotations

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

import nets
import oracles
from rollout_lab import (
    Network,
    Path,
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
from rollout_lab.errors import (
    EnumerationCapError,
    InvalidNetworkError,
    NetworkFormatError,
    NoInputOutputPathError,
)

PROPERTY_SETTINGS = settings(
    max_examples=120,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)

random_nets = st.builds(
    generate_random,
    st.integers(2, 5),
    st.floats(0.0, 0.6),
    st.integers(0, 10**6),
)


class TestNetworkConstruction:
    def test_nodes_are_sorted_and_deduplicated(self):
        net = Network(("B", "A", "B", "I"), (("I", "A"),))
        assert net.nodes == ("A", "B", "I")

    def test_edges_are_sorted_but_duplicates_survive(self):
        net = Network(("I", "A"), (("I", "A"), ("A", "A"), ("I", "A")))
        assert net.edges == (("A", "A"), ("I", "A"), ("I", "A"))

    @pytest.mark.parametrize("name", ["", "a-b", "a b", "x.y", "café", 3])
    def test_bad_names_are_rejected(self, name):
        with pytest.raises(ValueError):
            Network((name,), ())

    def test_adjacency_maps(self, cycle3):
        assert cycle3.successors["A"] == ("B",)
        assert cycle3.predecessors["A"] == ("C", "I")
        assert cycle3.successors["I"] == ("A",)


def test_input_nodes_examples(chain3, self_loop, cycle3):
    assert input_nodes(chain3) == ("I",)
    assert input_nodes(self_loop) == ("I",)
    assert input_nodes(cycle3) == ("I",)
    assert input_nodes(nets.two_inputs()) == ("I1", "I2")
    pure_cycle = Network(("A", "B"), (("A", "B"), ("B", "A")))
    assert input_nodes(pure_cycle) == ()


class TestValidation:
    def test_valid_network_has_clean_report(self, sr_net):
        report = validate_network(sr_net)
        assert report.ok
        assert report.issues == ()

    def test_empty_edge_set(self):
        report = validate_network(Network(("A",), ()))
        assert not report.ok
        assert "EmptyEdgeSet" in [i.code for i in report.issues]

    def test_duplicate_edge(self):
        net = Network(("I", "A"), (("I", "A"), ("I", "A")))
        codes = [i.code for i in validate_network(net).issues]
        assert codes == ["DuplicateEdge"]

    def test_undeclared_endpoint(self):
        net = Network(("I",), (("I", "A"),))
        codes = [i.code for i in validate_network(net).issues]
        assert "UndeclaredEndpoint" in codes

    def test_no_input_node(self):
        net = Network(("A", "B"), (("A", "B"), ("B", "A")))
        codes = {i.code for i in validate_network(net).issues}
        assert "NoInputNode" in codes
        assert "NotInputConnected" in codes

    def test_unreachable_node_is_flagged(self):
        net = Network(("I", "A", "B", "C"), (("I", "A"), ("B", "C"), ("C", "B")))
        issues = validate_network(net).issues
        flagged = {i.subject for i in issues if i.code == "NotInputConnected"}
        assert flagged == {"B", "C"}

    def test_require_valid_raises_with_report(self):
        net = Network(("I",), (("I", "A"),))
        with pytest.raises(InvalidNetworkError) as err:
            require_valid(net)
        assert not err.value.report.ok

    @PROPERTY_SETTINGS
    @given(net=random_nets)
    def test_generated_networks_always_validate(self, net):
        assert validate_network(net).ok
        # cross-check with the independent reachability oracle
        assert oracles.input_connected(net.nodes, net.edges)


class TestPath:
    def test_edges_must_chain(self):
        with pytest.raises(ValueError):
            Path((("A", "B"), ("C", "D")))
        with pytest.raises(ValueError):
            Path(())

    def test_cycle_and_minimality_flags(self):
        loop = Path((("A", "B"), ("B", "A")))
        assert loop.is_cycle and loop.is_minimal
        assert loop.length == 2
        assert loop.node_sequence() == ("A", "B", "A")
        walk = Path((("A", "B"), ("B", "A"), ("A", "B"), ("B", "A")))
        assert walk.is_cycle
        assert not walk.is_minimal


class TestMinimalCycles:
    def test_dag_has_none(self, chain3):
        assert minimal_cycles(chain3) == []

    def test_self_loop_is_a_length_one_cycle(self, self_loop):
        cycles = minimal_cycles(self_loop)
        assert [c.edges for c in cycles] == [(("A", "A"),)]

    def test_three_cycle(self, cycle3):
        cycles = minimal_cycles(cycle3)
        assert len(cycles) == 1
        assert cycles[0].node_sequence() == ("A", "B", "C", "A")

    def test_figure_eight_yields_two_digons(self):
        """Two 2-cycles through a shared node; the closed walk around both
        is not elementary and must not show up."""
        cycles = minimal_cycles(nets.figure_eight())
        assert [c.node_sequence() for c in cycles] == [
            ("A", "B", "A"),
            ("A", "C", "A"),
        ]

    def test_cap_is_enforced(self):
        dense = generate_random(5, 1.0, seed=1)
        with pytest.raises(EnumerationCapError):
            minimal_cycles(dense, cap=3)

    def test_invalid_network_is_rejected(self):
        with pytest.raises(InvalidNetworkError):
            minimal_cycles(Network(("A",), ()))

    @PROPERTY_SETTINGS
    @given(net=random_nets)
    def test_matches_brute_force_enumeration(self, net):
        expected = oracles.elementary_cycles(net)
        got = {c.node_sequence()[:-1] for c in minimal_cycles(net)}
        assert got == expected


class TestClassifyEdges:
    def test_three_cycle_classes(self, cycle3):
        analysis = classify_edges(cycle3)
        assert analysis.recurrent_edges == ()
        assert analysis.forward_edges == (("I", "A"),)
        assert len(analysis.disjoint_cycle_set) == 1

    def test_skip_recurrent_classes(self, sr_net):
        analysis = classify_edges(sr_net)
        assert analysis.recurrent_edges == (("H1", "H1"),)
        assert set(analysis.forward_edges) == {
            ("I", "H1"), ("H1", "H2"), ("H1", "O"), ("H2", "O")}

    def test_disjoint_set_is_edge_disjoint(self):
        analysis = classify_edges(nets.figure_eight())
        used = [e for c in analysis.disjoint_cycle_set for e in c.edges]
        assert len(used) == len(set(used))
        assert len(analysis.disjoint_cycle_set) == 2

    @PROPERTY_SETTINGS
    @given(net=random_nets)
    def test_invariants_hold_on_random_networks(self, net):
        analysis = classify_edges(net)
        cycle_edges = {e for c in analysis.minimal_cycles for e in c.edges}
        assert set(analysis.forward_edges).isdisjoint(cycle_edges)
        lengths = [c.length for c in analysis.minimal_cycles]
        assert lengths.count(1) == len(analysis.recurrent_edges)
        assert set(analysis.forward_edges) | cycle_edges == net.edge_set


class TestIoPathExtremes:
    def test_chain(self, chain3):
        assert io_path_extremes(chain3, {"B"}) == (2, 2)

    def test_skip_connection_spreads_the_extremes(self, sr_net):
        assert io_path_extremes(sr_net, {"O"}) == (2, 3)

    def test_self_loop_never_pads_a_path(self, self_loop):
        assert io_path_extremes(self_loop, {"A"}) == (1, 1)

    def test_multiple_inputs_race_to_the_output(self):
        assert io_path_extremes(nets.two_inputs(), {"O"}) == (1, 2)

    @pytest.mark.parametrize("k", range(7))
    def test_dsr_family(self, k):
        assert io_path_extremes(generate_dsr(k), {"O"}) == (4, 4 + k)

    def test_unknown_output(self, chain3):
        with pytest.raises(ValueError, match="unknown output"):
            io_path_extremes(chain3, {"Z"})

    def test_empty_outputs(self, chain3):
        with pytest.raises(ValueError):
            io_path_extremes(chain3, set())


class TestGenerateDsr:
    def test_base_topology(self):
        net = generate_dsr(0)
        assert net.nodes == ("H1", "H2", "HD", "I", "O")
        assert ("H1", "H1") in net.edge_set

    @pytest.mark.parametrize("k", range(6))
    def test_each_member_embeds_in_the_next(self, k):
        small, big = generate_dsr(k), generate_dsr(k + 1)
        assert set(small.nodes) < set(big.nodes)
        assert small.edge_set < big.edge_set

    @pytest.mark.parametrize("k", range(7))
    def test_members_validate(self, k):
        assert validate_network(generate_dsr(k)).ok

    @pytest.mark.parametrize("k", [-1, 7, 100])
    def test_out_of_range(self, k):
        with pytest.raises(ValueError):
            generate_dsr(k)


class TestGenerateRandom:
    def test_deterministic(self):
        assert generate_random(3, 0.5, 7) == generate_random(3, 0.5, 7)

    def test_complete_case(self):
        net = generate_random(5, 1.0, 1)
        # every ordered pair except edges into the designated input
        assert len(net.edges) == 20

    def test_zero_probability_leaves_a_star(self):
        net = generate_random(4, 0.0, 3)
        assert set(net.edges) == {("n00", "n01"), ("n00", "n02"), ("n00", "n03")}

    @pytest.mark.parametrize("bad", [0, 1, -2])
    def test_node_count_floor(self, bad):
        with pytest.raises(ValueError):
            generate_random(bad, 0.5, 0)

    def test_probability_range(self):
        with pytest.raises(ValueError):
            generate_random(3, 1.5, 0)


def test_sink_nodes(chain3, self_loop, cycle3):
    assert sink_nodes(chain3) == ("B",)
    assert sink_nodes(self_loop) == ("A",)   # a self-loop alone is no way out
    assert sink_nodes(cycle3) == ()


class TestTextFormat:
    def test_round_trip(self, sr_net):
        assert parse_network_text(network_to_text(sr_net)) == sr_net

    def test_comments_and_blank_lines(self):
        text = """
        # a comment
        node I
        node A   # trailing comment

        edge I A
        """
        net = parse_network_text(text)
        assert net == Network(("I", "A"), (("I", "A"),))

    def test_duplicate_edge_reports_line(self):
        with pytest.raises(NetworkFormatError, match="line 3"):
            parse_network_text("node I\nedge I I\nedge I I\n")

    def test_bad_directive(self):
        with pytest.raises(NetworkFormatError, match="line 1"):
            parse_network_text("vertex I\n")

    def test_bad_name_reports_column(self):
        with pytest.raises(NetworkFormatError) as err:
            parse_network_text("node a-b\n")
        assert err.value.line == 1
        assert err.value.column == 6


class TestJsonFormat:
    def test_round_trip(self, cycle3):
        assert parse_network_json(network_to_json(cycle3)) == cycle3

    def test_emit_is_idempotent(self, cycle3):
        once = network_to_json(cycle3)
        assert network_to_json(parse_network_json(once)) == once

    @pytest.mark.parametrize("text", [
        "[1, 2]",
        '{"nodes": "I", "edges": []}',
        '{"nodes": ["I"], "edges": [["I"]]}',
        '{"nodes": ["I"], "edges": [], "extra": 1}',
        '{"format_version": 2, "nodes": [], "edges": []}',
        '{"nodes": ["I", "A"], "edges": [["I", "A"], ["I", "A"]]}',
        "{not json",
    ])
    def test_malformed_documents(self, text):
        with pytest.raises(NetworkFormatError):
            parse_network_json(text)

    def test_sniffing_picks_the_right_parser(self, chain3):
        assert parse_network(network_to_json(chain3)) == chain3
        assert parse_network(network_to_text(chain3)) == chain3


@PROPERTY_SETTINGS
@given(net=random_nets)
def test_both_formats_round_trip_any_generated_network(net):
    assert parse_network(network_to_text(net)) == net
    assert parse_network(network_to_json(net)) == net


def test_no_input_output_path_error_exists():
    """The error type is part of the contract even though a validated
    network always reaches its declared nodes."""
    assert issubclass(NoInputOutputPathError, Exception)
