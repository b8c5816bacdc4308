from __future__ import annotations

"""Optimal execution plans via the Project Selection reduction solved as a minimum cut.

Each node n contributes two projects: a_n (profit -l_n) and b_n (profit l_n - c_n),
with a_n a prerequisite of b_n, and a_p a prerequisite of b_n for every parent p.
Selecting a_n and b_n computes n, a_n alone loads it, neither prunes it.
"""

from collections import deque
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from dagreuse.core.errors import PlanError
from dagreuse.tracking.signatures import ChangeSet
from dagreuse.workflow.dag import (
    ExecutionPlan,
    NodeId,
    NodeKind,
    NodeState,
    OperatorMetrics,
    WorkflowDag,
    plan_cost,
)

from .flow import UNBOUNDED, FlowNetwork, max_flow

SOURCE_VERTEX = "<source>"
SINK_VERTEX = "<sink>"


@dataclass(frozen=True, order=True)
class ProjectId:
    role: str  # "a" (load) or "b" (compute on top of load)
    node: NodeId

    def __str__(self) -> str:
        return f"{self.role}_{self.node}"


def load_project(node: NodeId) -> ProjectId:
    return ProjectId("a", node)


def compute_project(node: NodeId) -> ProjectId:
    return ProjectId("b", node)


@dataclass(frozen=True)
class PspInstance:
    projects: tuple[ProjectId, ...]
    profit: Mapping[ProjectId, int]
    # (dependent, prerequisite)
    prerequisites: frozenset[tuple[ProjectId, ProjectId]]
    # Pinned projects: always selected, together with their prerequisite closure.
    forced: frozenset[ProjectId] = frozenset()
    big: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "profit", MappingProxyType(dict(self.profit)))

    def total_profit(self, selection: Iterable[ProjectId]) -> int:
        return sum(self.profit[p] for p in selection)

    def is_closed(self, selection: Iterable[ProjectId]) -> bool:
        chosen = set(selection)
        return all(pre in chosen for dep, pre in self.prerequisites if dep in chosen)


def infinite_load_offset(metrics: Mapping[NodeId, OperatorMetrics]) -> int:
    """BIG: one more than the magnitude of every finite cost term in the instance."""
    total = 1
    for m in metrics.values():
        if m.loadable:
            total += m.load_ms + abs(m.load_ms - m.compute_ms)
        else:
            total += m.compute_ms
    return total


def reduce_to_psp(dag: WorkflowDag, metrics: Mapping[NodeId, OperatorMetrics], changeset: ChangeSet | None) -> PspInstance:
    big = infinite_load_offset({n: metrics[n] for n in dag.node_ids})
    original = changeset.original if changeset is not None else frozenset()
    projects: list[ProjectId] = []
    profit: dict[ProjectId, int] = {}
    pairs: set[tuple[ProjectId, ProjectId]] = set()
    forced: set[ProjectId] = set()

    for n in dag.node_ids:
        m = metrics[n]
        a, b = load_project(n), compute_project(n)
        load = m.load_ms if m.loadable else big
        projects += [a, b]
        profit[a] = -load
        profit[b] = load - m.compute_ms
        pairs.add((b, a))
        for child in dag.children(n):
            pairs.add((compute_project(child), a))
        if n in original:
            forced |= {a, b}
        elif dag.nodes[n].is_output:
            forced.add(a)

    return PspInstance(
        projects=tuple(projects),
        profit=profit,
        prerequisites=frozenset(pairs),
        forced=frozenset(forced),
        big=big,
    )


def _forced_closure(psp: PspInstance) -> set[ProjectId]:
    needs: dict[ProjectId, list[ProjectId]] = {}
    for dep, pre in psp.prerequisites:
        needs.setdefault(dep, []).append(pre)
    closed = set(psp.forced)
    queue = deque(sorted(psp.forced))
    while queue:
        p = queue.popleft()
        for pre in needs.get(p, ()):
            if pre not in closed:
                closed.add(pre)
                queue.append(pre)
    return closed


@dataclass(frozen=True)
class PspNetwork:
    network: FlowNetwork[str]
    contracted: frozenset[ProjectId]
    by_label: Mapping[str, ProjectId] = field(default_factory=dict)


def build_network(psp: PspInstance) -> PspNetwork:
    """Closure network; forced projects are contracted into the source."""
    contracted = frozenset(_forced_closure(psp))
    net: FlowNetwork[str] = FlowNetwork(source=SOURCE_VERTEX, sink=SINK_VERTEX)
    by_label: dict[str, ProjectId] = {}
    for p in sorted(psp.projects):
        if p in contracted:
            continue
        label = str(p)
        by_label[label] = p
        net.add_vertex(label)
        gain = psp.profit[p]
        if gain > 0:
            net.add_arc(SOURCE_VERTEX, label, gain)
        elif gain < 0:
            net.add_arc(label, SINK_VERTEX, -gain)
    for dep, pre in sorted(psp.prerequisites):
        if dep in contracted or pre in contracted:
            continue
        net.add_arc(str(dep), str(pre), UNBOUNDED)
    return PspNetwork(network=net, contracted=contracted, by_label=by_label)


def solve_psp(psp: PspInstance) -> frozenset[ProjectId]:
    """Maximum-profit prerequisite-closed selection (the smallest one among ties)."""
    built = build_network(psp)
    result = max_flow(built.network)
    chosen = {built.by_label[v] for v in result.min_cut_source_side if v in built.by_label}
    return frozenset(chosen | built.contracted)


def plan_from_projects(dag: WorkflowDag, selection: Iterable[ProjectId]) -> dict[NodeId, NodeState]:
    chosen = set(selection)
    unknown = sorted(str(p) for p in chosen if p.node not in dag.nodes)
    if unknown:
        raise PlanError(f"selection names unknown nodes: {', '.join(unknown)}")
    states: dict[NodeId, NodeState] = {}
    for n in dag.node_ids:
        a, b = load_project(n) in chosen, compute_project(n) in chosen
        if b:
            missing = [p for p in (n, *dag.parents(n)) if load_project(p) not in chosen]
            if missing:
                raise PlanError(f"selection not prerequisite-closed at b_{n}: missing " + ", ".join(f"a_{p}" for p in missing))
            states[n] = NodeState.COMPUTE
        elif a:
            states[n] = NodeState.LOAD
        else:
            states[n] = NodeState.PRUNE
    return states


def optimal_plan(dag: WorkflowDag, metrics: Mapping[NodeId, OperatorMetrics], changeset: ChangeSet | None) -> ExecutionPlan:
    psp = reduce_to_psp(dag, metrics, changeset)
    built = build_network(psp)
    result = max_flow(built.network)
    chosen = {built.by_label[v] for v in result.min_cut_source_side if v in built.by_label}
    states = plan_from_projects(dag, chosen | built.contracted)
    # A source's load time equals its compute time; reading it is running it.
    for n, state in states.items():
        if state is NodeState.LOAD and dag.nodes[n].kind is NodeKind.SOURCE:
            states[n] = NodeState.COMPUTE
    summary = {
        "projects": len(psp.projects),
        "prerequisites": len(psp.prerequisites),
        "forced": len(built.contracted),
        "big": psp.big,
        "flow": result.flow_value,
    }
    return ExecutionPlan(states=states, cost_ms=plan_cost(dag, metrics, states), summary=summary)


def emit_psp(psp: PspInstance) -> str:
    """Deterministic text dump of the instance and its flow network."""
    lines = ["# psp v1", f"big {psp.big}"]
    for p in sorted(psp.projects, key=str):
        lines.append(f"project {p} {psp.profit[p]}")
    for p in sorted(psp.forced, key=str):
        lines.append(f"forced {p}")
    for dep, pre in sorted(psp.prerequisites, key=lambda pair: (str(pair[0]), str(pair[1]))):
        lines.append(f"pair {dep} {pre}")
    lines.append("# network")
    net = build_network(psp).network
    for u, v, c in sorted(net.arcs, key=lambda arc: (arc[0], arc[1])):
        lines.append(f"arc {u} {v} {c}")
    return "\n".join(lines) + "\n"
