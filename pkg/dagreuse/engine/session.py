from __future__ import annotations

"""Seeded multi-iteration sessions: draw an iteration type, edit one node of that kind, rerun."""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from dagreuse.config.loader import load_settings
from dagreuse.config.schema import Settings
from dagreuse.core.errors import ScenarioError
from dagreuse.workflow.codec import load_workflow
from dagreuse.workflow.dag import NodeKind, WorkflowDag, slice_to_outputs

from .executors.base import Executor
from .lifecycle import run_iteration
from .store import IterationRecord, RunStore

logger = logging.getLogger(__name__)

ITERATION_KINDS = (NodeKind.DPR, NodeKind.LI, NodeKind.PPR)


@dataclass(frozen=True)
class Scenario:
    iterations: int
    weights: tuple[float, float, float]  # DPR, LI, PPR
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.iterations < 1:
            raise ScenarioError(f"iterations must be >= 1, got {self.iterations}")
        if len(self.weights) != len(ITERATION_KINDS):
            raise ScenarioError(f"expected {len(ITERATION_KINDS)} weights (dpr, li, ppr), got {len(self.weights)}")
        if any(w < 0 for w in self.weights) or sum(self.weights) <= 0:
            raise ScenarioError(f"weights must be non-negative with a positive sum, got {self.weights}")

    @classmethod
    def parse_weights(cls, text: str) -> tuple[float, float, float]:
        try:
            parts = tuple(float(p) for p in text.split(","))
        except ValueError as exc:
            raise ScenarioError(f"weights must be comma-separated numbers: {text!r}") from exc
        if len(parts) != 3:
            raise ScenarioError(f"expected three weights d,l,p, got {text!r}")
        return parts  # type: ignore[return-value]

    @property
    def probabilities(self) -> np.ndarray:
        w = np.asarray(self.weights, dtype=float)
        return w / w.sum()


def perturb(dag: WorkflowDag, node: str, t: int) -> WorkflowDag:
    """Append a revision comment to the node's code; its signature (and its descendants') changes."""
    decl = dag.nodes[node]
    return dag.with_node(decl.with_code(f"{decl.code}\n# rev {t}"))


def draw_modification(rng: np.random.Generator, dag: WorkflowDag, scenario: Scenario, *, redraw_limit: int = 16) -> tuple[NodeKind, str] | None:
    """Pick an iteration kind by weight, then a node of that kind uniformly; None after too many misses."""
    live = slice_to_outputs(dag)
    for _ in range(max(1, redraw_limit)):
        kind = ITERATION_KINDS[int(rng.choice(len(ITERATION_KINDS), p=scenario.probabilities))]
        candidates = [n for n in live.node_ids if live.nodes[n].kind is kind]
        if candidates:
            return kind, candidates[int(rng.integers(0, len(candidates)))]
        logger.warning("no %s node in the workflow; redrawing", kind.value)
    return None


def simulate_session(
    workflow: str | Path | WorkflowDag,
    scenario: Scenario,
    policy: str | None = None,
    budget: int | None = None,
    seed: int | None = None,
    *,
    store_dir: str | Path | None = None,
    settings: Settings | None = None,
    executor: Executor | str | None = None,
) -> list[IterationRecord]:
    """Iteration 0 runs the workflow as given; each later iteration edits one drawn node."""
    if settings is None:
        settings = load_settings(store_dir=store_dir)
    elif store_dir is not None:
        settings = settings.with_store(store_dir)
    if not RunStore(settings.paths).is_empty():
        raise ScenarioError(f"session store {settings.paths.store_dir} is not empty")

    rng = np.random.default_rng(scenario.seed if seed is None else seed)
    dag = workflow if isinstance(workflow, WorkflowDag) else load_workflow(workflow, disk_read_bytes_per_ms=settings.disk_read_bytes_per_ms)

    def step(current: WorkflowDag, kind: str, node: str | None) -> IterationRecord:
        return run_iteration(
            current,
            policy=policy,
            budget=budget,
            settings=settings,
            executor=executor,
            iteration_type=kind,
            modified_node=node,
        )

    records = [step(dag, "initial", None)]
    for t in range(1, scenario.iterations):
        drawn = draw_modification(rng, dag, scenario, redraw_limit=settings.redraw_limit)
        if drawn is None:
            logger.warning("iteration %d: no node matched after %d draws; rerunning unchanged", t, settings.redraw_limit)
            records.append(step(dag, "identity", None))
            continue
        kind, node = drawn
        dag = perturb(dag, node, t)
        records.append(step(dag, kind.value, node))
    return records
