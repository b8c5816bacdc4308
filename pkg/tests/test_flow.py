"""Tests for dagreuse.optimizer.flow: Edmonds-Karp max-flow and min-cut readout."""

import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from dagreuse.optimizer.flow import UNBOUNDED, FlowNetwork, max_flow
from dagreuse.oracle.brute_force import brute_force_min_cut
from dagreuse.oracle.instances import random_flow_network


def _textbook():
    net = FlowNetwork(source="s", sink="t")
    for u, v, c in [
        ("s", "v1", 16), ("s", "v2", 13), ("v1", "v3", 12), ("v2", "v1", 4),
        ("v2", "v4", 14), ("v3", "v2", 9), ("v3", "t", 20), ("v4", "v3", 7), ("v4", "t", 4),
    ]:
        net.add_arc(u, v, c)
    return net


@st.composite
def networks(draw):
    n = draw(st.integers(min_value=2, max_value=8))
    net = FlowNetwork(source=0, sink=n - 1, vertices=set(range(n)))
    pairs = [(u, v) for u in range(n - 1) for v in range(1, n) if u != v]
    for u, v in draw(st.lists(st.sampled_from(pairs), max_size=20)):
        net.add_arc(u, v, draw(st.integers(min_value=0, max_value=20)))
    return net


class TestMaxFlow:
    def test_textbook_network(self):
        """The classic six-vertex network carries 23 units."""
        result = max_flow(_textbook())
        assert result.flow_value == 23

    def test_cut_side_capacity_equals_flow(self):
        """The residual-reachable side is a cut whose capacity is the flow value."""
        net = _textbook()
        result = max_flow(net)
        assert "s" in result.min_cut_source_side
        assert "t" not in result.min_cut_source_side
        assert net.cut_capacity(set(result.min_cut_source_side)) == result.flow_value

    def test_disconnected_sink(self):
        """No path means zero flow and a source side of just what s reaches."""
        net = FlowNetwork(source="s", sink="t", vertices={"a"})
        net.add_arc("s", "a", 5)
        result = max_flow(net)
        assert result.flow_value == 0
        assert result.min_cut_source_side == frozenset({"s", "a"})

    def test_unbounded_arcs_never_cut(self):
        """An unbounded arc on the only path leaves the finite arc as the bottleneck."""
        net = FlowNetwork(source="s", sink="t")
        net.add_arc("s", "a", UNBOUNDED)
        net.add_arc("a", "t", 7)
        assert max_flow(net).flow_value == 7
        assert net.cut_capacity({"s"}) is UNBOUNDED

    def test_parallel_arcs_add_up(self):
        """Two arcs between the same pair contribute both capacities."""
        net = FlowNetwork(source="s", sink="t")
        net.add_arc("s", "t", 3)
        net.add_arc("s", "t", 4)
        assert max_flow(net).flow_value == 7

    def test_malformed_arcs_rejected(self):
        """Arcs into the source, out of the sink, or with negative capacity are errors."""
        net = FlowNetwork(source="s", sink="t")
        with pytest.raises(ValueError):
            net.add_arc("a", "s", 1)
        with pytest.raises(ValueError):
            net.add_arc("t", "a", 1)
        with pytest.raises(ValueError):
            net.add_arc("a", "b", -1)
        with pytest.raises(ValueError):
            FlowNetwork(source="x", sink="x")


class TestAgainstEnumeration:
    @settings(max_examples=60, deadline=None)
    @given(networks())
    def test_flow_equals_min_cut(self, net):
        """Max-flow value equals the brute-force minimum cut."""
        assert max_flow(net).flow_value == brute_force_min_cut(net)

    def test_seeded_networks(self):
        """100 seeded networks (up to 10 vertices, capacities up to 20) agree exactly."""
        rng = np.random.default_rng(9)
        for _ in range(100):
            net = random_flow_network(rng, max_vertices=10, max_capacity=20)
            assert max_flow(net).flow_value == brute_force_min_cut(net)
