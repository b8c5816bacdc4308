from __future__ import annotations

"""One iteration: slice, diff, purge, plan, execute, decide materializations, persist."""

import logging
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from dagreuse.config.loader import load_settings
from dagreuse.config.schema import Settings
from dagreuse.core.errors import CatalogIntegrityError, PlanError
from dagreuse.optimizer.materialization import (
    MatPolicy,
    StreamingMaterializer,
    cumulative_runtime,
    ledger_from_entries,
    purge_stale,
)
from dagreuse.optimizer.psp import optimal_plan
from dagreuse.tracking.signatures import ChangeSet, Signature, diff, resolve_load_times
from dagreuse.workflow.codec import load_workflow
from dagreuse.workflow.dag import (
    ExecutionPlan,
    NodeId,
    NodeState,
    OperatorMetrics,
    WorkflowDag,
    check_plan,
    load_ms_for_size,
    require_valid,
    slice_to_outputs,
    topological_order,
)

from .catalog import MaterializationCatalog, load_node
from .executors.base import Executor, NodeOutput
from .executors.registry import load_executor
from .store import EVENT_RANK, IterationRecord, LoadAudit, RunStore, TimelineEvent

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlannedIteration:
    """Everything decided before execution starts."""

    dag: WorkflowDag
    sliced: WorkflowDag
    changeset: ChangeSet
    sliced_changeset: ChangeSet
    metrics: Mapping[NodeId, OperatorMetrics]
    plan: ExecutionPlan


def prepare_plan(dag: WorkflowDag, changeset: ChangeSet, catalog: MaterializationCatalog) -> PlannedIteration:
    """Slice, resolve load times against the catalog and solve for the optimal plan."""
    require_valid(dag)
    sliced = slice_to_outputs(dag)
    sliced_changeset = changeset.restricted_to(sliced)
    metrics = resolve_load_times(sliced, sliced_changeset, catalog, dag.disk_read_bytes_per_ms)
    plan = optimal_plan(sliced, metrics, sliced_changeset)
    violations = check_plan(sliced, sliced_changeset, plan.states)
    if violations:
        raise PlanError("optimizer produced an infeasible plan: " + "; ".join(v.message for v in violations))
    return PlannedIteration(dag, sliced, changeset, sliced_changeset, metrics, plan)


def _compute_waves(dag: WorkflowDag, states: Mapping[NodeId, NodeState]) -> list[list[NodeId]]:
    """Compute nodes grouped so every node's computed parents sit in an earlier wave."""
    level: dict[NodeId, int] = {}
    for n in topological_order(dag):
        if states[n] is not NodeState.COMPUTE:
            continue
        level[n] = 1 + max((level[p] for p in dag.parents(n) if p in level), default=-1)
    waves: list[list[NodeId]] = [[] for _ in range(1 + max(level.values(), default=-1))]
    for n in sorted(level):
        waves[level[n]].append(n)
    return waves


def _changeset_summary(changeset: ChangeSet) -> dict[str, list[str]]:
    return {
        "original": sorted(changeset.original),
        "self_modified": sorted(changeset.self_modified),
        "propagated": sorted(changeset.propagated),
        "removed": sorted(changeset.removed),
    }


def run_iteration(
    workflow: str | Path | WorkflowDag,
    store_dir: str | Path | None = None,
    policy: str | MatPolicy | None = None,
    budget: int | None = None,
    *,
    settings: Settings | None = None,
    executor: Executor | str | None = None,
    iteration_type: str = "manual",
    modified_node: NodeId | None = None,
) -> IterationRecord:
    if settings is None:
        settings = load_settings(store_dir=store_dir)
    elif store_dir is not None:
        settings = settings.with_store(store_dir)
    settings.paths.ensure_dirs()
    policy = MatPolicy.parse(policy if policy is not None else settings.policy)
    budget_bytes = int(budget if budget is not None else settings.budget_bytes)
    if isinstance(executor, str) or executor is None:
        executor = load_executor(executor or settings.executor)

    store = RunStore(settings.paths)
    t = store.next_iteration()
    dag = workflow if isinstance(workflow, WorkflowDag) else load_workflow(workflow, disk_read_bytes_per_ms=settings.disk_read_bytes_per_ms)
    dag = dag.with_iteration(t)
    speed = dag.disk_read_bytes_per_ms

    catalog = MaterializationCatalog.open(settings.paths.store_dir, hash_algorithm=settings.hash_algorithm, disk_read_bytes_per_ms=speed)
    ledger, evicted = ledger_from_entries(budget_bytes, catalog.entries)
    for entry in evicted:
        catalog.remove(entry.signature)

    prev = store.latest_workflow()
    require_valid(dag)
    changeset = diff(prev, dag, algorithm=settings.hash_algorithm)
    ledger, purged = purge_stale(ledger, changeset, catalog)
    planned = prepare_plan(dag, changeset, catalog)
    sliced, cs, states = planned.sliced, planned.sliced_changeset, planned.plan.states
    logger.info(
        "iteration %d: %d original, plan cost %d ms (%d compute, %d load, %d prune)",
        t,
        len(changeset.original),
        planned.plan.cost_ms,
        planned.plan.count(NodeState.COMPUTE),
        planned.plan.count(NodeState.LOAD),
        planned.plan.count(NodeState.PRUNE),
    )

    workdir = settings.paths.store_dir / "work" / str(t)
    outputs: dict[NodeId, NodeOutput] = {}
    realized: dict[NodeId, int] = {n: 0 for n in sliced.node_ids}
    finish: dict[NodeId, int] = {}
    events: list[TimelineEvent] = []
    loads: list[LoadAudit] = []

    for n in planned.plan.nodes_in(NodeState.LOAD):
        sig = cs.signatures[n]
        copy_to = workdir / f"{n}.out" if not executor.deterministic else None
        output, ms = load_node(catalog, sig, copy_to=copy_to)
        outputs[n] = NodeOutput(node_id=n, size_bytes=output.size_bytes, path=output.path)
        realized[n] = finish[n] = ms
        loads.append(LoadAudit(node=n, signature=sig, load_ms=ms, original=n in cs.original))
        events.append(TimelineEvent(at_ms=ms, kind="load", node=n))

    try:
        with ThreadPoolExecutor(max_workers=max(1, settings.workers)) as pool:
            for wave in _compute_waves(sliced, states):
                inputs = [{p: outputs[p] for p in sliced.parents(n)} for n in wave]
                results = list(pool.map(lambda n, ins: executor.run(sliced.nodes[n], ins, workdir), wave, inputs))
                for n, result in zip(wave, results):
                    outputs[n] = result.output
                    realized[n] = result.elapsed_ms
                    finish[n] = max((finish[p] for p in sliced.parents(n)), default=0) + result.elapsed_ms
                    events.append(TimelineEvent(at_ms=finish[n], kind="complete", node=n))

        # A computed node goes out of scope once it and every non-pruned child have finished.
        out_of_scope = []
        for n in planned.plan.nodes_in(NodeState.COMPUTE):
            at = max([finish[n], *(finish[c] for c in sliced.children(n) if states[c] is not NodeState.PRUNE)])
            out_of_scope.append((at, n))
        out_of_scope.sort()

        materializer = StreamingMaterializer(ledger=ledger, policy=policy, iteration=t)
        for at, n in out_of_scope:
            output = outputs[n]
            sig = Signature(cs.signatures[n])
            result = materializer.decide(
                n,
                c_ms=cumulative_runtime(sliced, realized, n),
                l_ms=load_ms_for_size(output.size_bytes, speed),
                signature=sig,
                size_bytes=output.size_bytes,
                kind=sliced.nodes[n].kind,
                at_ms=at,
            )
            events.append(TimelineEvent(at_ms=at, kind="decide", node=n))
            if not result.materialize:
                continue
            try:
                _, write_ms = catalog.put(sig, n, output, iteration=t)
            except OSError as exc:
                logger.warning("could not materialize %s: %s", n, exc)
                materializer.retract(n)
                continue
            materializer.record_write(n, write_ms)
    finally:
        if workdir.exists():
            shutil.rmtree(workdir, ignore_errors=True)

    if ledger.used_bytes != catalog.used_bytes or ledger.used_bytes > budget_bytes:
        raise CatalogIntegrityError(
            f"ledger ({ledger.used_bytes} bytes) and catalog ({catalog.used_bytes} bytes) disagree under budget {budget_bytes}"
        )

    events.sort(key=lambda e: (e.at_ms, EVENT_RANK[e.kind], e.node))
    full_states = {n: states.get(n, NodeState.PRUNE).value for n in dag.node_ids}
    run_ms = sum(realized.values())
    mat_ms = materializer.write_ms
    last = store.last_record()
    previous_total = last.cumulative_run_ms if last is not None else 0

    record = IterationRecord(
        iteration=t,
        iteration_type=iteration_type,
        modified_node=modified_node,
        policy=policy.value,
        executor=executor.name,
        budget_bytes=budget_bytes,
        changeset=_changeset_summary(changeset),
        states=full_states,
        predicted_cost_ms=planned.plan.cost_ms,
        psp_summary=dict(planned.plan.summary),
        realized_ms={n: realized[n] for n in sliced.node_ids if states[n] is not NodeState.PRUNE},
        loads=loads,
        decisions=[r.to_json() for r in materializer.records],
        events=events,
        ledger=ledger.snapshot(),
        purged=sorted(e.node_id for e in purged),
        evicted=sorted(e.node_id for e in evicted),
        run_ms=run_ms,
        mat_time_ms=mat_ms,
        iteration_ms=run_ms + mat_ms,
        cumulative_run_ms=previous_total + run_ms + mat_ms,
        storage_bytes=ledger.used_bytes,
        am_capped=materializer.capped,
    )
    store.save(record, dag)
    return record
