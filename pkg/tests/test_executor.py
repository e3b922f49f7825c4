"""Numeric window execution, carry-over streams, and stream comparison."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

import nets
import oracles
from rollout_lab import (
    NumericSpec,
    compare_rollout_functions,
    execute_stream,
    execute_window,
    generate_random,
    inference_factor,
    most_sequential_patterns,
    numeric_spec_to_json,
    parse_input_sequence,
    parse_numeric_spec_json,
    random_numeric_spec,
    streaming_pattern,
    validate_spec,
)
from rollout_lab.errors import (
    MissingInputError,
    NetworkFormatError,
    ShapeMismatchError,
)

PROPERTY_SETTINGS = settings(
    max_examples=50,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)

small_nets = st.builds(
    generate_random,
    st.integers(2, 4),
    st.floats(0.0, 0.5),
    st.integers(0, 10**6),
)


def chain_spec():
    """Scalar identity parameters for chain3, easy to trace by hand."""
    return NumericSpec(
        dims={"I": 1, "A": 1, "B": 1},
        edge_weights={("I", "A"): np.array([[2.0]]), ("A", "B"): np.array([[3.0]])},
        node_bias={"A": np.array([0.5]), "B": np.array([-1.0])},
        activation="identity",
    )


def constant_inputs(net, frames, value=1.0, dim=1):
    from rollout_lab import input_nodes

    return [{v: np.full(dim, value) for v in input_nodes(net)} for _ in range(frames)]


@st.composite
def execution_cases(draw):
    net = draw(small_nets)
    pattern = draw(st.sampled_from(nets.cached_patterns(net)))
    w = draw(st.integers(1, 3))
    spec = random_numeric_spec(
        net, seed=draw(st.integers(0, 10**6)),
        activation=draw(st.sampled_from(["identity", "relu", "tanh"])))
    rng = np.random.default_rng(draw(st.integers(0, 10**6)))
    from rollout_lab import input_nodes

    inputs = [
        {v: rng.uniform(-2.0, 2.0, spec.dims[v]) for v in input_nodes(net)}
        for _ in range(w + 1)
    ]
    return net, pattern, w, spec, inputs


class TestValidateSpec:
    def test_good_spec_passes(self, chain3):
        validate_spec(chain3, chain_spec())

    def test_unknown_activation(self, chain3):
        spec = chain_spec()
        bad = NumericSpec(spec.dims, spec.edge_weights, spec.node_bias, "softplus")
        with pytest.raises(ShapeMismatchError, match="activation"):
            validate_spec(chain3, bad)

    def test_missing_dimension(self, chain3):
        spec = chain_spec()
        bad = NumericSpec({"I": 1, "A": 1}, spec.edge_weights, spec.node_bias, "identity")
        with pytest.raises(ShapeMismatchError, match="dimension"):
            validate_spec(chain3, bad)

    def test_missing_bias(self, chain3):
        spec = chain_spec()
        bad = NumericSpec(spec.dims, spec.edge_weights, {"A": np.array([0.5])}, "identity")
        with pytest.raises(ShapeMismatchError, match="missing bias"):
            validate_spec(chain3, bad)

    def test_input_nodes_must_not_carry_a_bias(self, chain3):
        spec = chain_spec()
        biases = dict(spec.node_bias, I=np.array([1.0]))
        with pytest.raises(ShapeMismatchError, match="input node"):
            validate_spec(chain3, NumericSpec(spec.dims, spec.edge_weights, biases, "identity"))

    def test_wrong_weight_shape(self, chain3):
        spec = chain_spec()
        weights = dict(spec.edge_weights)
        weights[("A", "B")] = np.zeros((2, 2))
        with pytest.raises(ShapeMismatchError, match="A->B"):
            validate_spec(chain3, NumericSpec(spec.dims, weights, spec.node_bias, "identity"))

    def test_missing_weight(self, chain3):
        spec = chain_spec()
        weights = {("I", "A"): spec.edge_weights[("I", "A")]}
        with pytest.raises(ShapeMismatchError, match="missing weight"):
            validate_spec(chain3, NumericSpec(spec.dims, weights, spec.node_bias, "identity"))


class TestExecuteWindow:
    def test_streaming_chain_by_hand(self, chain3):
        inputs = [{"I": [1.0]}, {"I": [10.0]}, {"I": [100.0]}]
        trace = execute_window(chain3, streaming_pattern(chain3), 2, chain_spec(), inputs)
        assert trace.values[(1, "A")] == pytest.approx([2.5])
        assert trace.values[(1, "B")] == pytest.approx([-1.0])
        assert trace.values[(2, "A")] == pytest.approx([20.5])
        assert trace.values[(2, "B")] == pytest.approx([6.5])

    def test_sequential_chain_by_hand(self, chain3):
        pattern = {("I", "A"): 0, ("A", "B"): 0}
        inputs = [{"I": [1.0]}, {"I": [10.0]}]
        trace = execute_window(chain3, pattern, 1, chain_spec(), inputs)
        assert trace.values[(1, "A")] == pytest.approx([20.5])
        assert trace.values[(1, "B")] == pytest.approx([60.5])

    def test_two_inputs_sum_into_the_merge_node(self):
        net = nets.two_inputs()
        spec = NumericSpec(
            dims={"I1": 1, "I2": 1, "A": 1, "O": 1},
            edge_weights={
                ("I1", "A"): np.array([[1.0]]), ("I2", "A"): np.array([[10.0]]),
                ("A", "O"): np.array([[1.0]]), ("I2", "O"): np.array([[100.0]])},
            node_bias={"A": np.zeros(1), "O": np.zeros(1)},
            activation="identity")
        inputs = [{"I1": [1.0], "I2": [2.0]}, {"I1": [3.0], "I2": [4.0]}]
        trace = execute_window(net, streaming_pattern(net), 1, spec, inputs)
        assert trace.values[(1, "A")] == pytest.approx([21.0])
        assert trace.values[(1, "O")] == pytest.approx([200.0])

    def test_frame_zero_override(self, chain3):
        inputs = [{"I": [0.0]}, {"I": [0.0]}]
        trace = execute_window(
            chain3, streaming_pattern(chain3), 1, chain_spec(), inputs,
            frame0={"A": [4.0]})
        assert trace.values[(0, "A")] == pytest.approx([4.0])
        assert trace.values[(1, "B")] == pytest.approx([11.0])   # -1 + 3*4

    def test_override_must_name_non_inputs(self, chain3):
        inputs = [{"I": [0.0]}, {"I": [0.0]}]
        with pytest.raises(ShapeMismatchError, match="frame-0 overrides"):
            execute_window(chain3, streaming_pattern(chain3), 1, chain_spec(),
                           inputs, frame0={"I": [1.0]})

    def test_update_order_follows_the_tableau(self, sr_net):
        pattern = most_sequential_patterns(sr_net)[0]
        spec = random_numeric_spec(sr_net, seed=5, dims=1)
        trace = execute_window(sr_net, pattern, 1, spec, constant_inputs(sr_net, 2))
        steps = [s for s, _ in trace.update_order]
        assert steps == sorted(steps)

    def test_short_input_sequence(self, chain3):
        with pytest.raises(MissingInputError):
            execute_window(chain3, streaming_pattern(chain3), 2, chain_spec(),
                           [{"I": [1.0]}])

    def test_missing_input_name(self, chain3):
        with pytest.raises(MissingInputError):
            execute_window(chain3, streaming_pattern(chain3), 1, chain_spec(),
                           [{"I": [1.0]}, {}])

    def test_wrong_input_shape(self, chain3):
        with pytest.raises(ShapeMismatchError):
            execute_window(chain3, streaming_pattern(chain3), 1, chain_spec(),
                           [{"I": [1.0, 2.0]}, {"I": [1.0]}])

    @PROPERTY_SETTINGS
    @given(case=execution_cases())
    def test_matches_the_recursive_evaluator_bit_for_bit(self, case):
        """Dual route: iterative tableau-ordered evaluation vs memoized
        recursion from the update equation. Same canonical summation
        order per node, so the floats must agree exactly, which also
        settles that the evaluation order among ready nodes is
        irrelevant."""
        net, pattern, w, spec, inputs = case
        trace = execute_window(net, pattern, w, spec, inputs)
        expected = oracles.recursive_window_values(net, pattern, w, spec, inputs)
        assert set(trace.values) == set(expected)
        for key, vec in expected.items():
            assert np.array_equal(trace.values[key], vec), key

    @PROPERTY_SETTINGS
    @given(case=execution_cases())
    def test_identity_zero_bias_execution_is_linear(self, case):
        net, pattern, w, spec, inputs = case
        linear = NumericSpec(
            dims=spec.dims,
            edge_weights=spec.edge_weights,
            node_bias={k: np.zeros_like(np.asarray(v)) for k, v in spec.node_bias.items()},
            activation="identity")
        once = execute_window(net, pattern, w, linear, inputs)
        doubled = execute_window(
            net, pattern, w, linear,
            [{k: 2.0 * np.asarray(v) for k, v in frame.items()} for frame in inputs])
        for key, vec in once.values.items():
            assert np.allclose(doubled.values[key], 2.0 * vec, atol=1e-12)


class TestExecuteStream:
    def test_self_loop_accumulates(self, self_loop):
        spec = NumericSpec(
            dims={"I": 1, "A": 1},
            edge_weights={("I", "A"): np.eye(1), ("A", "A"): np.eye(1)},
            node_bias={"A": np.zeros(1)},
            activation="identity")
        responses = execute_stream(
            self_loop, streaming_pattern(self_loop), spec,
            constant_inputs(self_loop, 7), steps=6)
        assert [r.step for r in responses] == [1, 2, 3, 4, 5, 6]
        assert [float(r.values["A"][0]) for r in responses] == [1, 2, 3, 4, 5, 6]

    def test_steps_are_floored_to_whole_frames(self, sr_net):
        pattern = most_sequential_patterns(sr_net)[0]   # period 3
        spec = random_numeric_spec(sr_net, seed=1, dims=1)
        responses = execute_stream(sr_net, pattern, spec,
                                   constant_inputs(sr_net, 3), steps=5)
        assert [r.step for r in responses] == [3]

    def test_zero_steps(self, sr_net):
        spec = random_numeric_spec(sr_net, seed=1, dims=1)
        assert execute_stream(sr_net, streaming_pattern(sr_net), spec,
                              constant_inputs(sr_net, 1), steps=0) == []

    def test_outputs_default_to_sinks(self, ff_chain):
        spec = random_numeric_spec(ff_chain, seed=2, dims=1)
        responses = execute_stream(ff_chain, streaming_pattern(ff_chain), spec,
                                   constant_inputs(ff_chain, 3), steps=2)
        assert all(set(r.values) == {"O"} for r in responses)

    def test_short_sample_sequence(self, ff_chain):
        spec = random_numeric_spec(ff_chain, seed=2, dims=1)
        with pytest.raises(MissingInputError):
            execute_stream(ff_chain, streaming_pattern(ff_chain), spec,
                           constant_inputs(ff_chain, 3), steps=4)

    @PROPERTY_SETTINGS
    @given(case=execution_cases())
    def test_stream_equals_one_big_window_frame_by_frame(self, case):
        """Carry-over compatibility: h size-1 windows chained through their
        frame-0 overrides compute the same floats as a single size-h
        window, for any valid pattern."""
        net, pattern, w, spec, inputs = case
        trace = execute_window(net, pattern, w, spec, inputs)
        period = inference_factor(net, pattern)
        responses = execute_stream(net, pattern, spec, inputs,
                                   steps=w * period, outputs=net.nodes)
        assert len(responses) == w
        for response in responses:
            for name in net.nodes:
                assert np.array_equal(
                    response.values[name], trace.values[(response.frame, name)])


class TestCompareRolloutFunctions:
    def test_pattern_agrees_with_itself(self, sr_net):
        spec = random_numeric_spec(sr_net, seed=3)
        p = streaming_pattern(sr_net)
        report = compare_rollout_functions(sr_net, p, p, spec)
        assert report.equivalent
        assert report.best_offset == 0
        assert report.max_deviation == 0.0

    def test_pipeline_chain_is_equivalent_up_to_delay(self, ff_chain):
        spec = random_numeric_spec(ff_chain, seed=4)
        report = compare_rollout_functions(
            ff_chain, streaming_pattern(ff_chain),
            most_sequential_patterns(ff_chain)[0], spec)
        assert report.equivalent
        assert report.best_offset == 3     # one extra frame per pipeline stage
        assert report.max_deviation <= 1e-12

    def test_swapping_the_arguments_flips_the_offset(self, ff_chain):
        spec = random_numeric_spec(ff_chain, seed=4)
        report = compare_rollout_functions(
            ff_chain, most_sequential_patterns(ff_chain)[0],
            streaming_pattern(ff_chain), spec)
        assert report.equivalent
        assert report.best_offset == -3

    def test_skip_network_is_behaviorally_distinct(self, s_net):
        """With time-varying inputs the streaming skip network mixes two
        consecutive samples; no frame shift reconciles that with the
        sequential stream."""
        spec = random_numeric_spec(s_net, seed=6)
        report = compare_rollout_functions(
            s_net, streaming_pattern(s_net),
            most_sequential_patterns(s_net)[0], spec)
        assert not report.equivalent
        assert report.max_deviation > 1e-3

    def test_report_dict_shape(self, ff_chain):
        spec = random_numeric_spec(ff_chain, seed=4)
        doc = compare_rollout_functions(
            ff_chain, streaming_pattern(ff_chain), streaming_pattern(ff_chain),
            spec, trials=2).as_dict()
        assert doc["equivalent"] is True
        assert doc["trials"] == 2
        assert "0" in doc["deviations"]


class TestRandomSpec:
    def test_deterministic(self, sr_net):
        a = random_numeric_spec(sr_net, seed=9)
        b = random_numeric_spec(sr_net, seed=9)
        assert a.dims == b.dims
        for e in sr_net.edges:
            assert np.array_equal(a.edge_weights[e], b.edge_weights[e])

    def test_dims_argument_forms(self, chain3):
        assert random_numeric_spec(chain3, 0, dims=3).dims == {"A": 3, "B": 3, "I": 3}
        explicit = random_numeric_spec(chain3, 0, dims={"I": 1, "A": 2, "B": 1})
        assert explicit.dims["A"] == 2
        drawn = random_numeric_spec(chain3, 0, max_dim=2)
        assert all(1 <= d <= 2 for d in drawn.dims.values())


class TestSpecSerialization:
    def test_round_trip(self, sr_net):
        spec = random_numeric_spec(sr_net, seed=11)
        parsed = parse_numeric_spec_json(numeric_spec_to_json(spec))
        assert parsed.dims == dict(spec.dims)
        assert parsed.activation == spec.activation
        for e in sr_net.edges:
            assert np.allclose(parsed.edge_weights[e], spec.edge_weights[e])
        for v, bias in spec.node_bias.items():
            assert np.allclose(parsed.node_bias[v], bias)

    @pytest.mark.parametrize("text", [
        '{"dims": {"A": 1.5}, "edges": {}}',
        '{"dims": {"A": 1}, "edges": {"AB": [[1]]}}',
        '{"dims": {"A": 1}, "edges": {"A->B": [1, 2]}}',
        '{"dims": {"A": 1}, "edges": {"A->B": [[1], [1, 2]]}}',
        '{"dims": {"A": 1}, "edges": {}, "biases": {"A": [[1]]}}',
        '{"dims": {"A": 1}, "edges": {}, "oops": 1}',
        "{",
    ])
    def test_malformed_documents(self, text):
        with pytest.raises(NetworkFormatError):
            parse_numeric_spec_json(text)

    def test_input_sequence_parsing(self):
        frames = parse_input_sequence('[{"I": [1, 2]}, {"I": [3, 4]}]')
        assert len(frames) == 2
        assert np.array_equal(frames[1]["I"], [3.0, 4.0])

    @pytest.mark.parametrize("text", [
        '{"I": [1]}',
        '[["I", 1]]',
        '[{"I": "x"}]',
        '[{"I": [[1]]}]',
    ])
    def test_malformed_input_sequences(self, text):
        with pytest.raises(NetworkFormatError):
            parse_input_sequence(text)
