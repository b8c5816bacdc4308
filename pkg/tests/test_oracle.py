"""Tests for dagreuse.oracle: exhaustive references, the knapsack construction and instance generators."""

import itertools
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from dagreuse.core.errors import EnumerationBoundError
from dagreuse.optimizer.psp import optimal_plan
from dagreuse.oracle.brute_force import (
    brute_force_oep,
    brute_force_oep_perturbed,
    brute_force_omp,
    brute_force_solver,
    ilp_from_states,
    ilp_is_feasible,
    ilp_objective,
    iter_feasible_states,
    states_from_ilp,
)
from dagreuse.oracle.instances import random_dag, random_knapsack, random_oep_instance
from dagreuse.oracle.knapsack import (
    KnapsackInstance,
    brute_force_knapsack,
    item_id,
    item_index,
    items_from_materialization,
    knapsack_dp,
    knapsack_to_omp,
)
from dagreuse.workflow import INFINITE, NodeKind, NodeState, check_plan, plan_cost


class TestBruteForceOep:
    def test_witness_is_feasible_and_costed(self):
        """The returned assignment passes the plan checks and costs what is reported."""
        rng = np.random.default_rng(1)
        for _ in range(30):
            inst = random_oep_instance(rng, max_nodes=9)
            cost, states = brute_force_oep(inst.dag, inst.metrics, inst.changeset)
            assert check_plan(inst.dag, inst.changeset, states) == []
            assert plan_cost(inst.dag, inst.metrics, states) == cost

    def test_enumeration_agrees_with_branch_and_bound(self):
        """The minimum over every feasible assignment is the branch-and-bound cost."""
        rng = np.random.default_rng(2)
        for _ in range(20):
            inst = random_oep_instance(rng, max_nodes=7)
            cost, _ = brute_force_oep(inst.dag, inst.metrics, inst.changeset)
            every = [plan_cost(inst.dag, inst.metrics, s) for s in iter_feasible_states(inst.dag, inst.metrics, inst.changeset)]
            assert min(every) == cost

    def test_perturbed_formulation_matches_pinning(self):
        """Letting originals float at inf/0/-eps reaches the same optimum as pinning them to Compute."""
        rng = np.random.default_rng(3)
        for _ in range(40):
            inst = random_oep_instance(rng, max_nodes=8, original_prob=0.3)
            pinned, _ = brute_force_oep(inst.dag, inst.metrics, inst.changeset)
            perturbed, states = brute_force_oep_perturbed(inst.dag, inst.metrics, inst.changeset)
            assert perturbed == pinned
            assert all(states[n] is NodeState.COMPUTE for n in inst.changeset.original)

    def test_bound_enforced(self):
        """More nodes than the bound raise EnumerationBoundError."""
        rng = np.random.default_rng(4)
        dag = random_dag(rng, 20)
        with pytest.raises(EnumerationBoundError):
            brute_force_oep(dag, dag.declared_metrics(), None)

    def test_brute_force_solver_shape(self):
        """The solver wrapper returns an execution plan with the exhaustive cost."""
        rng = np.random.default_rng(6)
        inst = random_oep_instance(rng, max_nodes=6)
        plan = brute_force_solver(inst.dag, inst.metrics, inst.changeset)
        assert plan.cost_ms == optimal_plan(inst.dag, inst.metrics, inst.changeset).cost_ms


class TestIlp:
    def test_objective_matches_plan_cost(self):
        """On 100 seeded instances the 0/1 objective of the optimal plan equals its cost."""
        rng = np.random.default_rng(7)
        for _ in range(100):
            inst = random_oep_instance(rng, max_nodes=8)
            _, states = brute_force_oep(inst.dag, inst.metrics, inst.changeset)
            assignment = ilp_from_states(states)
            assert ilp_is_feasible(inst.dag, assignment)
            assert states_from_ilp(assignment) == states
            assert ilp_objective(inst.dag, inst.metrics, assignment) == plan_cost(inst.dag, inst.metrics, states)

    def test_compute_under_pruned_parent_infeasible(self):
        """x_b of a child above x_a of its parent breaks feasibility."""
        rng = np.random.default_rng(8)
        dag = random_dag(rng, 6, edge_prob=0.9)
        child = next(n for n in dag.node_ids if dag.parents(n))
        states = {n: NodeState.COMPUTE for n in dag.node_ids}
        states[dag.parents(child)[0]] = NodeState.PRUNE
        assert not ilp_is_feasible(dag, ilp_from_states(states))


class TestReuseMonotonicity:
    def test_lowering_a_load_time_never_hurts(self):
        """On 100 seeded instances, a cheaper load for one node never raises the optimum."""
        rng = np.random.default_rng(11)
        checked = 0
        while checked < 100:
            inst = random_oep_instance(rng, max_nodes=10)
            candidates = [n for n in inst.dag.node_ids if inst.dag.nodes[n].kind is not NodeKind.SOURCE and n not in inst.changeset.original]
            if not candidates:
                continue
            node = candidates[int(rng.integers(0, len(candidates)))]
            m = inst.metrics[node]
            lowered = dict(inst.metrics)
            new_load = int(rng.integers(1, 101)) if m.load_ms is INFINITE else int(rng.integers(0, m.load_ms + 1))
            lowered[node] = m.with_load(new_load)
            before, _ = brute_force_oep(inst.dag, inst.metrics, inst.changeset)
            after, _ = brute_force_oep(inst.dag, lowered, inst.changeset)
            assert after <= before
            assert optimal_plan(inst.dag, lowered, inst.changeset).cost_ms == after
            checked += 1


class TestKnapsack:
    def test_instance_validation(self):
        """Negative capacity and non-positive items are rejected."""
        with pytest.raises(ValueError):
            KnapsackInstance(-1, ((1, 1),))
        with pytest.raises(ValueError):
            KnapsackInstance(3, ((0, 1),))

    def test_item_ids(self):
        """Item nodes are numbered from one."""
        assert item_id(0) == "item1"
        assert item_index("item12") == 11
        assert items_from_materialization({"root", "item2", "item1"}) == (0, 1)

    def test_construction_shape(self):
        """A root source feeds one output per item; costs and sizes follow the scaling."""
        inst = KnapsackInstance(4, ((2, 3), (3, 4)))
        dag, metrics, budget = knapsack_to_omp(inst, scale=1000)
        assert budget == 4000
        assert dag.outputs == ("item1", "item2")
        assert dag.nodes["root"].kind is NodeKind.SOURCE
        assert metrics["item1"].compute_ms == (3 + 2 * 2) * 1000
        assert metrics["item2"].load_ms == 3000

    def test_small_example(self):
        """Budget 4 with items (2, 3) and (3, 4) stores item 2 at T_M = 14."""
        dag, metrics, budget = knapsack_to_omp(KnapsackInstance(4, ((2, 3), (3, 4))), scale=1)
        cost, chosen = brute_force_omp(dag, metrics, budget)
        assert cost == 14
        assert chosen == frozenset({"item2"})

    def test_zero_budget_stores_nothing(self):
        """With no budget the only candidate set is empty."""
        dag, metrics, _ = knapsack_to_omp(KnapsackInstance(4, ((2, 3), (3, 4))), scale=1)
        _, chosen = brute_force_omp(dag, metrics, 0)
        assert chosen == frozenset()

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.tuples(st.integers(1, 12), st.integers(1, 30)), min_size=0, max_size=10),
        st.integers(0, 60),
    )
    def test_dp_matches_enumeration(self, items, capacity):
        """The dynamic program and the bitmask enumeration agree on the optimum."""
        inst = KnapsackInstance(capacity, tuple(items))
        best, chosen = brute_force_knapsack(inst)
        dp_best, dp_chosen = knapsack_dp(inst)
        assert best == dp_best
        assert inst.profit_of(chosen) == best
        assert inst.size_of(chosen) <= capacity
        assert inst.profit_of(dp_chosen) == dp_best
        assert inst.size_of(dp_chosen) <= capacity

    def test_materialization_solves_knapsack(self):
        """On 50 seeded instances the best materialization set carries the optimal knapsack profit."""
        rng = np.random.default_rng(31)
        for _ in range(50):
            inst = random_knapsack(rng, max_items=12)
            dag, metrics, budget = knapsack_to_omp(inst)
            _, chosen = brute_force_omp(dag, metrics, budget)
            optimum, _ = brute_force_knapsack(inst)
            picked = items_from_materialization(chosen)
            assert inst.profit_of(picked) == optimum
            assert inst.size_of(picked) <= inst.capacity

    def test_unique_optimum_witnesses_agree(self):
        """When one subset is strictly best, materialization, enumeration and the DP all name it."""
        rng = np.random.default_rng(43)
        checked = 0
        for _ in range(50):
            inst = random_knapsack(rng, max_items=7)
            fitting = [
                c
                for r in range(len(inst.items) + 1)
                for c in itertools.combinations(range(len(inst.items)), r)
                if inst.size_of(c) <= inst.capacity
            ]
            best = max(inst.profit_of(c) for c in fitting)
            winners = [c for c in fitting if inst.profit_of(c) == best]
            if len(winners) != 1:
                continue
            checked += 1
            dag, metrics, budget = knapsack_to_omp(inst)
            _, chosen = brute_force_omp(dag, metrics, budget)
            assert items_from_materialization(chosen) == winners[0]
            assert brute_force_knapsack(inst)[1] == winners[0]
            assert knapsack_dp(inst)[1] == winners[0]
        assert checked > 0
