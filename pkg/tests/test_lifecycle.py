"""Tests for dagreuse.engine.lifecycle: one iteration end to end against a store."""

import json
import shlex
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from dagreuse.config.loader import load_settings
from dagreuse.core.errors import ExecutorError
from dagreuse.engine.catalog import MaterializationCatalog
from dagreuse.engine.executors import ProcessExecutor
from dagreuse.engine.lifecycle import run_iteration
from dagreuse.engine.session import perturb
from dagreuse.engine.store import RunStore
from dagreuse.fixtures import fixture_path
from dagreuse.workflow import NodeKind, OperatorDecl, WorkflowDag, load_workflow, workflow_to_dict


def _settings(tmp_path):
    return load_settings(store_dir=tmp_path / "store")


def _states(record, state):
    return sorted(n for n, s in record.states.items() if s == state)


def _chain(n=10):
    decls = [
        OperatorDecl(
            f"c{i:02d}",
            NodeKind.DPR,
            f"step {i}",
            (f"c{i - 1:02d}",) if i > 1 else (),
            is_output=i == n,
            compute_ms=3,
            size_bytes=i,
        )
        for i in range(1, n + 1)
    ]
    return WorkflowDag.from_decls(decls, disk_read_bytes_per_ms=1)


class TestFirstIteration:
    def test_everything_live_is_computed(self, tmp_path):
        """With an empty store every live node runs and the sliced-away node is pruned."""
        dag = load_workflow(fixture_path("census"))
        record = run_iteration(dag, settings=_settings(tmp_path))
        assert record.iteration == 0
        assert _states(record, "Prune") == ["raceExt"]
        assert record.predicted_cost_ms == sum(d.compute_ms for n, d in dag.nodes.items() if n != "raceExt")
        assert record.run_ms == record.predicted_cost_ms

    def test_history_and_workflow_saved(self, tmp_path):
        """The record, the workflow version and the decision log are written."""
        settings = _settings(tmp_path)
        record = run_iteration(fixture_path("census"), settings=settings)
        store = RunStore(settings.paths)
        assert store.iterations() == [0]
        assert store.load_record(0) == record
        assert store.latest_workflow() is not None
        assert len(store.read_decisions()) == len(record.decisions)

    def test_settings_speed_applies_to_undeclared_workflow(self, tmp_path):
        """A workflow file without a disk speed runs at the configured one."""
        data = workflow_to_dict(load_workflow(fixture_path("census")))
        del data["disk_read_bytes_per_ms"]
        path = tmp_path / "census.json"
        path.write_text(json.dumps(data))
        settings = _settings(tmp_path).with_overrides(disk_read_bytes_per_ms=7)
        run_iteration(path, settings=settings)
        assert RunStore(settings.paths).latest_workflow().disk_read_bytes_per_ms == 7

    def test_chain_fully_materialized(self, tmp_path):
        """Every chain node passes the heuristic; stored bytes and write time equal the sum of sizes."""
        record = run_iteration(_chain(), settings=_settings(tmp_path))
        assert [d["decision"] for d in record.decisions] == ["Materialize"] * 10
        assert record.storage_bytes == sum(range(1, 11))
        assert record.mat_time_ms == sum(range(1, 11))
        assert [d["C_ms"] for d in record.decisions] == [3 * i for i in range(1, 11)]

    def test_decisions_follow_children(self, tmp_path):
        """A node is decided only after it and its non-pruned children completed."""
        dag = load_workflow(fixture_path("nlp"))
        record = run_iteration(dag, settings=_settings(tmp_path))
        completed = {e.node: e.at_ms for e in record.events if e.kind == "complete"}
        for e in record.events:
            if e.kind != "decide":
                continue
            assert e.at_ms >= completed[e.node]
            for child in dag.children(e.node):
                assert e.at_ms >= completed[child]
        assert [e.at_ms for e in record.events] == sorted(e.at_ms for e in record.events)

    def test_sources_never_stored(self, tmp_path):
        """Even always-materialize discards source outputs."""
        record = run_iteration(fixture_path("nlp"), settings=_settings(tmp_path), policy="am")
        reasons = {d["node"]: d["reason"] for d in record.decisions}
        assert reasons["corpus"] == "source"
        assert reasons["labels"] == "source"


class TestReuse:
    def test_identical_rerun_loads_output_only(self, tmp_path):
        """Rerunning an unchanged workflow loads the stored output and prunes the rest."""
        settings = _settings(tmp_path)
        run_iteration(fixture_path("census"), settings=settings)
        record = run_iteration(fixture_path("census"), settings=settings)
        assert record.iteration == 1
        assert _states(record, "Load") == ["checkResults"]
        assert _states(record, "Compute") == []
        assert record.predicted_cost_ms == 1
        assert [(a.node, a.original) for a in record.loads] == [("checkResults", False)]

    def test_postprocessing_edit(self, tmp_path):
        """Editing the final step recomputes only it, on top of loaded predictions."""
        settings = _settings(tmp_path)
        dag = load_workflow(fixture_path("census"))
        run_iteration(dag, settings=settings)
        record = run_iteration(perturb(dag, "checkResults", 1), settings=settings)
        assert record.changeset["self_modified"] == ["checkResults"]
        assert _states(record, "Compute") == ["checkResults"]
        assert _states(record, "Load") == ["predictions"]
        assert record.predicted_cost_ms == 1 + 50
        assert "checkResults" in record.purged

    def test_expensive_parse_is_reused(self, tmp_path):
        """Editing a feature extractor loads the parse instead of recomputing it."""
        settings = _settings(tmp_path)
        dag = load_workflow(fixture_path("nlp"))
        run_iteration(dag, settings=settings)
        record = run_iteration(perturb(dag, "nerFeatures", 1), settings=settings)
        assert record.states["parse"] == "Load"
        assert record.changeset["original"] == ["evaluate", "learner", "nerFeatures", "predict"]
        assert record.changeset["propagated"] == ["evaluate", "learner", "predict"]

    def test_small_example_plan(self, tmp_path):
        """After editing n6 the small fixture loads n4, n5, n8 and recomputes n6, n7 for 62 ms."""
        settings = _settings(tmp_path)
        dag = load_workflow(fixture_path("toy"))
        run_iteration(dag, settings=settings)
        record = run_iteration(perturb(dag, "n6", 1), settings=settings)
        assert _states(record, "Load") == ["n4", "n5", "n8"]
        assert _states(record, "Compute") == ["n6", "n7"]
        assert _states(record, "Prune") == ["n1", "n2", "n3"]
        assert record.predicted_cost_ms == 62
        assert record.psp_summary["projects"] == 16

    def test_no_original_is_ever_loaded(self, tmp_path):
        """Load audits never name a node that is original in its iteration."""
        settings = _settings(tmp_path)
        dag = load_workflow(fixture_path("genomics"))
        records = [run_iteration(dag, settings=settings)]
        for t, node in enumerate(["align", "clusterModel", "classifierEval"], start=1):
            dag = perturb(dag, node, t)
            records.append(run_iteration(dag, settings=settings))
        for record in records:
            original = set(record.changeset["original"])
            assert all(not a.original and a.node not in original for a in record.loads)


class TestBudget:
    def test_zero_budget_stores_nothing(self, tmp_path):
        """Budget 0 disables materialization."""
        record = run_iteration(fixture_path("census"), settings=_settings(tmp_path), budget=0)
        assert record.storage_bytes == 0
        assert {d["decision"] for d in record.decisions} == {"Discard"}

    def test_shrunk_budget_evicts_oldest(self, tmp_path):
        """A later, smaller budget evicts stored entries before planning."""
        settings = _settings(tmp_path)
        first = run_iteration(fixture_path("census"), settings=settings)
        assert first.storage_bytes > 10_000
        second = run_iteration(fixture_path("census"), settings=settings, budget=10_000)
        assert second.evicted
        assert second.storage_bytes <= 10_000
        catalog = MaterializationCatalog.open(settings.paths.store_dir)
        assert catalog.used_bytes == second.storage_bytes

    def test_cumulative_time_accumulates(self, tmp_path):
        """Cumulative time adds each iteration's run and write time."""
        settings = _settings(tmp_path)
        a = run_iteration(fixture_path("mnist"), settings=settings)
        b = run_iteration(fixture_path("mnist"), settings=settings)
        assert a.cumulative_run_ms == a.run_ms + a.mat_time_ms
        assert b.cumulative_run_ms == a.cumulative_run_ms + b.run_ms + b.mat_time_ms


def _py(code):
    return f"{shlex.quote(sys.executable)} -c {shlex.quote(code)}"


WRITE_SOURCE = "import os; open(os.environ['DAGREUSE_OUTPUT'], 'wb').write(b'x' * 100)"
DOUBLE_INPUT = (
    "import os; data = b''.join(open(p, 'rb').read() for p in os.environ['DAGREUSE_INPUTS'].split(os.pathsep)); "
    "open(os.environ['DAGREUSE_OUTPUT'], 'wb').write(data * 2)"
)


class TestProcessExecutor:
    def _dag(self, child_command):
        return WorkflowDag.from_decls(
            [
                OperatorDecl("src", NodeKind.SOURCE, "write", command=_py(WRITE_SOURCE), compute_ms=1),
                OperatorDecl("out", NodeKind.PPR, "double", ("src",), is_output=True, command=child_command, compute_ms=1),
            ],
            disk_read_bytes_per_ms=1000,
        )

    def test_real_outputs_are_stored(self, tmp_path):
        """Commands run, their files are measured, and an always-materialized output is copied in."""
        settings = _settings(tmp_path)
        record = run_iteration(self._dag(_py(DOUBLE_INPUT)), settings=settings, policy="am", executor=ProcessExecutor())
        assert record.executor == "process"
        catalog = MaterializationCatalog.open(settings.paths.store_dir)
        assert [(e.node_id, e.size_bytes) for e in catalog.entries] == [("out", 200)]
        assert not (settings.paths.store_dir / "work" / "0").exists()

    def test_failure_aborts_before_writes(self, tmp_path):
        """A failing command raises and leaves neither catalog entries nor history."""
        settings = _settings(tmp_path)
        with pytest.raises(ExecutorError):
            run_iteration(self._dag(_py("raise SystemExit(3)")), settings=settings, policy="am", executor="process")
        assert RunStore(settings.paths).iterations() == []
        assert len(MaterializationCatalog.open(settings.paths.store_dir)) == 0
