"""Tests for dagreuse.optimizer.materialization: budget ledger, streaming decisions and T_M."""

import sys
from dataclasses import dataclass
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from dagreuse.core.errors import PlanError
from dagreuse.optimizer.materialization import (
    BudgetLedger,
    Decision,
    LedgerEntry,
    MatPolicy,
    StreamingMaterializer,
    cumulative_runtime,
    ledger_from_entries,
    materialization_runtime,
    next_iteration_metrics,
    on_out_of_scope,
    purge_stale,
)
from dagreuse.oracle.knapsack import KnapsackInstance, knapsack_to_omp
from dagreuse.tracking.signatures import ChangeSet, Signature
from dagreuse.workflow import INFINITE, NodeKind, OperatorDecl, WorkflowDag


@dataclass
class _Stored:
    signature: str
    node_id: str
    size_bytes: int
    created_iteration: int


class _Remover:
    def __init__(self):
        self.removed = []

    def remove(self, signature):
        self.removed.append(signature)
        return True


def _decide(policy, c_ms, l_ms, ledger, size=10, kind=NodeKind.DPR, node="x"):
    return on_out_of_scope(node, c_ms, l_ms, ledger, policy, signature=Signature(f"sig-{node}"), size_bytes=size, kind=kind)


class TestLedger:
    def test_admission_tracks_bytes(self):
        """Admitted entries count against the budget until released."""
        ledger = BudgetLedger(100)
        assert ledger.try_admit(LedgerEntry("a", Signature("s1"), 60))
        assert not ledger.try_admit(LedgerEntry("b", Signature("s2"), 50))
        assert ledger.used_bytes == 60
        assert ledger.release(Signature("s1")) is not None
        assert ledger.remaining_bytes == 100

    def test_existing_signature_is_a_hit(self):
        """Admitting a stored signature again costs nothing."""
        ledger = BudgetLedger(100, [LedgerEntry("a", Signature("s1"), 90)])
        assert ledger.try_admit(LedgerEntry("a", Signature("s1"), 90))
        assert ledger.used_bytes == 90

    def test_zero_budget_admits_nothing(self):
        """A zero budget refuses even empty outputs."""
        assert not BudgetLedger(0).admits(0)
        with pytest.raises(ValueError):
            BudgetLedger(-1)

    def test_eviction_when_budget_shrinks(self):
        """Oldest entries go first until the rest fits."""
        stored = [
            _Stored("s-old", "a", 40, 0),
            _Stored("s-mid", "b", 40, 1),
            _Stored("s-new", "c", 40, 2),
        ]
        ledger, evicted = ledger_from_entries(80, stored)
        assert [e.node_id for e in evicted] == ["a"]
        assert ledger.used_bytes == 80
        assert Signature("s-new") in ledger

    def test_purge_keeps_only_live_signatures(self):
        """Entries whose signature no equivalent node carries are removed."""
        ledger = BudgetLedger(100, [LedgerEntry("a", Signature("keep"), 10), LedgerEntry("b", Signature("stale"), 20)])
        changeset = ChangeSet(original=frozenset({"b"}), equivalent={"a": Signature("keep")})
        remover = _Remover()
        kept, purged = purge_stale(ledger, changeset, remover)
        assert [e.node_id for e in purged] == ["b"]
        assert remover.removed == ["stale"]
        assert kept.used_bytes == 10

    def test_snapshot_lists_entries(self):
        """The snapshot carries budget, usage and sorted entries."""
        ledger = BudgetLedger(50, [LedgerEntry("z", Signature("2"), 5), LedgerEntry("a", Signature("1"), 7)])
        snap = ledger.snapshot()
        assert snap["used_bytes"] == 12
        assert [e["node_id"] for e in snap["entries"]] == ["a", "z"]


class TestOutOfScope:
    def test_heuristic_threshold_is_strict(self):
        """The heuristic needs C > 2l; equality discards."""
        ledger = BudgetLedger(1000)
        assert _decide(MatPolicy.STREAMING_HEURISTIC, 10, 5, ledger).reason == "cost"
        assert _decide(MatPolicy.STREAMING_HEURISTIC, 11, 5, ledger).decision is Decision.MATERIALIZE

    def test_budget_limits_heuristic(self):
        """An eligible node that does not fit is discarded for budget."""
        ledger = BudgetLedger(5)
        result = _decide(MatPolicy.STREAMING_HEURISTIC, 100, 1, ledger, size=10)
        assert result.reason == "budget"
        assert not result.capped

    def test_always_materialize_is_capped(self):
        """AM ignores the cost test but flags when the budget stops it."""
        ledger = BudgetLedger(15)
        assert _decide(MatPolicy.ALWAYS_MATERIALIZE, 1, 100, ledger, size=10, node="a").materialize
        result = _decide(MatPolicy.ALWAYS_MATERIALIZE, 1, 100, ledger, size=10, node="b")
        assert result.reason == "budget"
        assert result.capped

    def test_never_materialize_and_sources(self):
        """NM always discards, and no policy stores a source."""
        ledger = BudgetLedger(1000)
        assert _decide(MatPolicy.NEVER_MATERIALIZE, 100, 1, ledger).reason == "policy"
        assert _decide(MatPolicy.ALWAYS_MATERIALIZE, 100, 1, ledger, kind=NodeKind.SOURCE).reason == "source"
        assert ledger.used_bytes == 0

    def test_policy_parse(self):
        """Policy names parse case-insensitively; unknown names are errors."""
        assert MatPolicy.parse("AM") is MatPolicy.ALWAYS_MATERIALIZE
        with pytest.raises(ValueError, match="unknown policy"):
            MatPolicy.parse("sometimes")


class TestStreamingMaterializer:
    def test_records_in_decision_order(self):
        """Decisions are logged in the order they are taken, with write times attached later."""
        m = StreamingMaterializer(ledger=BudgetLedger(100), policy=MatPolicy.STREAMING_HEURISTIC, iteration=3)
        m.decide("a", c_ms=50, l_ms=1, signature=Signature("sa"), size_bytes=10, kind=NodeKind.DPR, at_ms=5)
        m.decide("b", c_ms=2, l_ms=1, signature=Signature("sb"), size_bytes=10, kind=NodeKind.DPR, at_ms=9)
        m.record_write("a", 4)
        assert [r.node for r in m.records] == ["a", "b"]
        assert m.materialized == ["a"]
        assert m.write_ms == 4
        assert m.records[0].to_json()["C_ms"] == 50
        assert m.records[0].iteration == 3

    def test_second_decision_rejected(self):
        """A node is decided at most once per iteration."""
        m = StreamingMaterializer(ledger=BudgetLedger(100), policy=MatPolicy.ALWAYS_MATERIALIZE)
        m.decide("a", c_ms=1, l_ms=1, signature=Signature("sa"), size_bytes=1, kind=NodeKind.LI)
        with pytest.raises(PlanError):
            m.decide("a", c_ms=1, l_ms=1, signature=Signature("sa"), size_bytes=1, kind=NodeKind.LI)

    def test_retract_releases_bytes(self):
        """A failed write turns the decision into a discard and frees the ledger."""
        ledger = BudgetLedger(100)
        m = StreamingMaterializer(ledger=ledger, policy=MatPolicy.ALWAYS_MATERIALIZE)
        m.decide("a", c_ms=1, l_ms=1, signature=Signature("sa"), size_bytes=30, kind=NodeKind.DPR)
        m.retract("a")
        assert ledger.used_bytes == 0
        assert m.records[0].reason == "write-failed"
        assert m.materialized == []


def _chain(n, speed=1):
    decls = []
    for i in range(1, n + 1):
        decls.append(
            OperatorDecl(
                f"c{i:02d}",
                NodeKind.DPR,
                f"step {i}",
                (f"c{i - 1:02d}",) if i > 1 else (),
                is_output=i == n,
                compute_ms=3,
                size_bytes=i * speed,
            )
        )
    return WorkflowDag.from_decls(decls, disk_read_bytes_per_ms=speed)


class TestCumulativeRuntime:
    def test_chain_accumulates_ancestors(self):
        """C of the i-th chain node is 3 * i."""
        dag = _chain(10)
        times = {n: 3 for n in dag.node_ids}
        assert [cumulative_runtime(dag, times, n) for n in dag.node_ids] == [3 * i for i in range(1, 11)]

    def test_shared_ancestor_counted_once(self):
        """A diamond's root contributes once to the sink's C."""
        dag = WorkflowDag.from_decls(
            [
                OperatorDecl("r", NodeKind.SOURCE, "r", compute_ms=1),
                OperatorDecl("a", NodeKind.DPR, "a", ("r",), compute_ms=2),
                OperatorDecl("b", NodeKind.DPR, "b", ("r",), compute_ms=4),
                OperatorDecl("s", NodeKind.PPR, "s", ("a", "b"), is_output=True, compute_ms=8),
            ]
        )
        times = {"r": 1, "a": 2, "b": 4, "s": 8}
        assert cumulative_runtime(dag, times, "s") == 15

    def test_missing_time_rejected(self):
        """An ancestor without a realized time is a PlanError."""
        dag = _chain(3)
        with pytest.raises(PlanError):
            cumulative_runtime(dag, {"c03": 3}, "c03")

    def test_heuristic_stores_whole_chain(self):
        """With l_i = i and c_i = 3 every chain node passes C > 2l and all bytes are stored."""
        dag = _chain(10)
        times = {n: 3 for n in dag.node_ids}
        m = StreamingMaterializer(ledger=BudgetLedger(10_000), policy=MatPolicy.STREAMING_HEURISTIC)
        for i, n in enumerate(dag.node_ids, start=1):
            m.decide(n, c_ms=cumulative_runtime(dag, times, n), l_ms=i, signature=Signature(n), size_bytes=i, kind=NodeKind.DPR)
        assert m.materialized == list(dag.node_ids)
        assert m.ledger.used_bytes == sum(range(1, 11))


class TestMaterializationRuntime:
    def test_knapsack_example(self):
        """Items (2, 3) and (3, 4) under budget 4: storing item 2 gives T_M = 14."""
        dag, metrics, _ = knapsack_to_omp(KnapsackInstance(4, ((2, 3), (3, 4))), scale=1)
        assert materialization_runtime(dag, metrics, []) == 18
        assert materialization_runtime(dag, metrics, ["item1"]) == 15
        assert materialization_runtime(dag, metrics, ["item2"]) == 14

    def test_next_iteration_metrics(self):
        """Only sources and the chosen set stay loadable."""
        dag, metrics, _ = knapsack_to_omp(KnapsackInstance(4, ((2, 3), (3, 4))), scale=1)
        nxt = next_iteration_metrics(dag, metrics, ["item2"])
        assert nxt["root"].load_ms == 1
        assert nxt["item1"].load_ms is INFINITE
        assert nxt["item2"].load_ms == 3

    def test_unknown_node_rejected(self):
        """Materializing a node outside the DAG is a PlanError."""
        dag, metrics, _ = knapsack_to_omp(KnapsackInstance(4, ((2, 3),)), scale=1)
        with pytest.raises(PlanError):
            materialization_runtime(dag, metrics, ["ghost"])
