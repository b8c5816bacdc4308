from __future__ import annotations

"""Policy comparison: the streaming heuristic against always- and never-materialize.

Every policy replays the same seeded modification sequence, each run in its own
empty store. With several runs the per-iteration times are averaged before they
are accumulated.
"""

import logging
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from dagreuse.config.schema import Settings
from dagreuse.core.errors import ScenarioError
from dagreuse.engine.executors.base import Executor
from dagreuse.engine.session import Scenario, simulate_session
from dagreuse.engine.store import IterationRecord
from dagreuse.reporting.comparison import POLICIES, ComparisonRow
from dagreuse.workflow.codec import load_workflow
from dagreuse.workflow.dag import WorkflowDag

logger = logging.getLogger(__name__)

Sessions = Mapping[str, Sequence[Sequence[IterationRecord]]]


def session_store(root: str | Path, policy: str, run: int) -> Path:
    return Path(root) / policy / f"run{run}"


def _edits(records: Sequence[IterationRecord]) -> list[tuple[str, str | None]]:
    return [(r.iteration_type, r.modified_node) for r in records]


def check_same_edits(sessions: Sessions) -> None:
    """Every run of every policy must have replayed one modification sequence."""
    reference = _edits(sessions[POLICIES[0]][0])
    for policy in POLICIES:
        for i, records in enumerate(sessions[policy]):
            if _edits(records) != reference:
                raise ScenarioError(f"{policy} run {i} drew a different modification sequence")


def comparison_rows(sessions: Sessions) -> list[ComparisonRow]:
    check_same_edits(sessions)
    reference = sessions[POLICIES[0]][0]
    running = {p: Fraction(0) for p in POLICIES}
    rows = []
    for t, ref in enumerate(reference):
        iteration_ms: dict[str, Fraction] = {}
        storage: dict[str, Fraction] = {}
        for p in POLICIES:
            runs = sessions[p]
            iteration_ms[p] = Fraction(sum(r[t].iteration_ms for r in runs), len(runs))
            storage[p] = Fraction(sum(r[t].storage_bytes for r in runs), len(runs))
            running[p] += iteration_ms[p]
        rows.append(
            ComparisonRow(
                t=ref.iteration,
                iteration_type=ref.iteration_type,
                modified_node=ref.modified_node,
                iteration_ms=iteration_ms,
                cumulative_ms=dict(running),
                storage_bytes=storage,
                am_capped=any(r[t].am_capped for r in sessions["am"]),
            )
        )
    return rows


def run_comparison(
    workflow: str | Path | WorkflowDag,
    scenario: Scenario,
    *,
    store_root: str | Path,
    settings: Settings,
    runs: int = 1,
    budget: int | None = None,
    executor: Executor | str | None = None,
) -> list[ComparisonRow]:
    if runs < 1:
        raise ScenarioError(f"runs must be >= 1, got {runs}")
    dag = workflow if isinstance(workflow, WorkflowDag) else load_workflow(workflow, disk_read_bytes_per_ms=settings.disk_read_bytes_per_ms)
    sessions: dict[str, list[list[IterationRecord]]] = {p: [] for p in POLICIES}
    for run in range(runs):
        for policy in POLICIES:
            store = session_store(store_root, policy, run)
            logger.info("comparison run %d/%d: %s in %s", run + 1, runs, policy, store)
            records = simulate_session(dag, scenario, policy=policy, budget=budget, settings=settings.with_store(store), executor=executor)
            sessions[policy].append(records)
    return comparison_rows(sessions)
