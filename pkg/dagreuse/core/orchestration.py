from __future__ import annotations

"""Command-level flows shared by the CLI and the tests."""

import logging
from pathlib import Path

import numpy as np

from dagreuse.config.schema import Settings
from dagreuse.core.contracts import ComparisonSummary, PlanSummary, ReportSummary, SessionSummary, VerifyCase, VerifySummary
from dagreuse.core.errors import EnumerationBoundError
from dagreuse.core.results import write_atomic
from dagreuse.engine.catalog import MaterializationCatalog
from dagreuse.engine.lifecycle import prepare_plan, run_iteration
from dagreuse.engine.session import Scenario, simulate_session
from dagreuse.engine.store import IterationRecord, RunStore
from dagreuse.experiments.compare import run_comparison
from dagreuse.optimizer.flow import max_flow
from dagreuse.optimizer.psp import emit_psp, optimal_plan, reduce_to_psp
from dagreuse.oracle.brute_force import brute_force_min_cut, brute_force_oep
from dagreuse.oracle.instances import random_flow_network, random_knapsack, random_oep_instance
from dagreuse.oracle.knapsack import brute_force_knapsack, knapsack_dp
from dagreuse.reporting.comparison import write_comparison
from dagreuse.reporting.report import build_report, tally_decisions, write_report
from dagreuse.tracking.signatures import ChangeSet, diff
from dagreuse.workflow.codec import load_workflow
from dagreuse.workflow.dag import INFINITE, NodeKind, WorkflowDag, check_plan, require_valid, slice_to_outputs

logger = logging.getLogger(__name__)


def plan(settings: Settings, workflow: str | Path, *, emit_psp_to: str | Path | None = None) -> PlanSummary:
    """The plan the next `run` would execute against the store, without touching the store."""
    dag = load_workflow(workflow, disk_read_bytes_per_ms=settings.disk_read_bytes_per_ms)
    require_valid(dag)
    store = RunStore(settings.paths)
    changeset = diff(store.latest_workflow(), dag, algorithm=settings.hash_algorithm)
    catalog = MaterializationCatalog.read(settings.paths.store_dir, hash_algorithm=settings.hash_algorithm)
    planned = prepare_plan(dag, changeset, catalog)
    psp_path = None
    if emit_psp_to is not None:
        psp = reduce_to_psp(planned.sliced, planned.metrics, planned.sliced_changeset)
        psp_path = write_atomic(Path(emit_psp_to), emit_psp(psp))
    return PlanSummary(
        dag=dag,
        sliced=planned.sliced,
        changeset=planned.changeset,
        metrics=planned.metrics,
        plan=planned.plan,
        psp_path=psp_path,
    )


def run(settings: Settings, workflow: str | Path, *, policy: str | None = None, budget: int | None = None, executor: str | None = None) -> IterationRecord:
    return run_iteration(workflow, policy=policy, budget=budget, settings=settings, executor=executor)


def simulate(
    settings: Settings,
    workflow: str | Path,
    scenario: Scenario,
    out_dir: str | Path,
    *,
    policy: str | None = None,
    budget: int | None = None,
    executor: str | None = None,
) -> SessionSummary:
    records = simulate_session(workflow, scenario, policy=policy, budget=budget, settings=settings, executor=executor)
    csv_path, json_path = write_report(build_report(records), out_dir)
    return SessionSummary(records=records, report_csv=csv_path, report_json=json_path)


def compare(
    settings: Settings,
    workflow: str | Path,
    scenario: Scenario,
    out_dir: str | Path,
    *,
    runs: int = 1,
    budget: int | None = None,
    executor: str | None = None,
) -> ComparisonSummary:
    """opt, am and nm on one seeded scenario; sessions live under `<store>/<policy>/run<i>`."""
    rows = run_comparison(
        workflow,
        scenario,
        store_root=settings.paths.store_dir,
        settings=settings,
        runs=runs,
        budget=budget,
        executor=executor,
    )
    csv_path, json_path = write_comparison(rows, out_dir, runs=runs, seed=scenario.seed)
    return ComparisonSummary(rows=rows, runs=runs, report_csv=csv_path, report_json=json_path)


def diff_files(prev: str | Path, next_path: str | Path, *, algorithm: str = "sha256") -> ChangeSet:
    prev_dag, next_dag = load_workflow(prev), load_workflow(next_path)
    require_valid(prev_dag)
    require_valid(next_dag)
    return diff(prev_dag, next_dag, algorithm=algorithm)


def report(settings: Settings, out_dir: str | Path | None = None) -> ReportSummary:
    """Per-iteration rows from the history plus a tally of the decision log."""
    store = RunStore(settings.paths)
    rows = build_report(store.load_history())
    written = write_report(rows, out_dir) if out_dir is not None else None
    return ReportSummary(rows=rows, decisions=tally_decisions(store.read_decisions()), written=written)


def _check_oep(label: str, dag: WorkflowDag, metrics, changeset: ChangeSet | None, max_nodes: int) -> VerifyCase:
    solved = optimal_plan(dag, metrics, changeset)
    oracle_cost, _ = brute_force_oep(dag, metrics, changeset, max_nodes=max_nodes)
    violations = check_plan(dag, changeset, solved.states)
    return VerifyCase(label=label, solver_cost=solved.cost_ms, oracle_cost=oracle_cost, violations=len(violations))


def verify_workflow(settings: Settings, workflow: str | Path) -> VerifySummary:
    """Solver vs. exhaustive search with nothing materialized, then with everything materialized."""
    dag = load_workflow(workflow, disk_read_bytes_per_ms=settings.disk_read_bytes_per_ms)
    require_valid(dag)
    sliced = slice_to_outputs(dag)
    bound = settings.oep_enum_max_nodes
    if len(sliced) > bound:
        raise EnumerationBoundError(f"workflow has {len(sliced)} live nodes; exhaustive search is limited to {bound}")
    warm = sliced.declared_metrics()
    cold = {n: m if sliced.nodes[n].kind is NodeKind.SOURCE else m.with_load(INFINITE) for n, m in warm.items()}
    return VerifySummary(
        cases=[
            _check_oep("cold", sliced, cold, None, bound),
            _check_oep("warm", sliced, warm, None, bound),
        ]
    )


def verify_random(settings: Settings, count: int, *, seed: int = 0, max_nodes: int = 12) -> VerifySummary:
    """Seeded random plans, flow networks and knapsacks against their exhaustive references."""
    rng = np.random.default_rng(seed)
    cases: list[VerifyCase] = []
    for i in range(count):
        inst = random_oep_instance(rng, max_nodes=min(max_nodes, settings.oep_enum_max_nodes))
        cases.append(_check_oep(f"oep#{i}", inst.dag, inst.metrics, inst.changeset, settings.oep_enum_max_nodes))
        net = random_flow_network(rng)
        cases.append(VerifyCase(label=f"flow#{i}", solver_cost=max_flow(net).flow_value, oracle_cost=brute_force_min_cut(net)))
        knap = random_knapsack(rng, max_items=min(12, settings.knapsack_enum_max_items))
        oracle, _ = brute_force_knapsack(knap, max_items=settings.knapsack_enum_max_items)
        cases.append(VerifyCase(label=f"knapsack#{i}", solver_cost=knapsack_dp(knap)[0], oracle_cost=oracle))
    return VerifySummary(cases=cases)
