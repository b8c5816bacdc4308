from __future__ import annotations

"""Exhaustive reference solvers: feasible state assignments, closures, cuts and materialization sets."""

from dataclasses import dataclass
from itertools import combinations
from types import MappingProxyType
from typing import Callable, Iterator, Mapping

from dagreuse.core.errors import EnumerationBoundError
from dagreuse.optimizer.flow import UNBOUNDED, FlowNetwork
from dagreuse.optimizer.materialization import materialization_runtime
from dagreuse.optimizer.psp import ProjectId, PspInstance, optimal_plan
from dagreuse.tracking.signatures import ChangeSet
from dagreuse.workflow.dag import (
    ExecutionPlan,
    NodeId,
    NodeKind,
    NodeState,
    OperatorMetrics,
    WorkflowDag,
)

OEP_MAX_NODES = 16
CLOSURE_MAX_PROJECTS = 20
CUT_MAX_VERTICES = 16

STATE_ORDER = (NodeState.PRUNE, NodeState.LOAD, NodeState.COMPUTE)


def _check_bound(count: int, bound: int, what: str) -> None:
    if count > bound:
        raise EnumerationBoundError(f"{count} {what} exceeds the enumeration bound of {bound}")


def _state_cost(m: OperatorMetrics, state: NodeState) -> int:
    if state is NodeState.COMPUTE:
        return m.compute_ms
    if state is NodeState.LOAD:
        return m.load_ms
    return 0


def _allowed_states(dag: WorkflowDag, metrics: Mapping[NodeId, OperatorMetrics], original: frozenset[NodeId], n: NodeId, *, pin_originals: bool = True) -> list[NodeState]:
    out = []
    for state in STATE_ORDER:
        if pin_originals and n in original and state is not NodeState.COMPUTE:
            continue
        if n in original and state is NodeState.LOAD:
            continue
        if dag.nodes[n].is_output and state is NodeState.PRUNE:
            continue
        if state is NodeState.LOAD and not metrics[n].loadable:
            continue
        out.append(state)
    return out


class _Search:
    """Depth-first enumeration in NodeId order with states tried Prune < Load < Compute."""

    def __init__(self, dag: WorkflowDag, metrics: Mapping[NodeId, OperatorMetrics], changeset: ChangeSet | None, *, pin_originals: bool = True):
        self.dag = dag
        self.metrics = metrics
        self.order = list(dag.node_ids)
        original = changeset.original if changeset is not None else frozenset()
        self.original = frozenset(original & set(dag.nodes))
        self.allowed = {n: _allowed_states(dag, metrics, self.original, n, pin_originals=pin_originals) for n in self.order}
        position = {n: i for i, n in enumerate(self.order)}
        # Edges whose later endpoint (in enumeration order) is n; checked when n is assigned.
        self.closing: dict[NodeId, list[tuple[NodeId, NodeId]]] = {n: [] for n in self.order}
        for p, c in dag.edges():
            later = p if position[p] > position[c] else c
            self.closing[later].append((p, c))

    def consistent(self, states: Mapping[NodeId, NodeState], n: NodeId) -> bool:
        for p, c in self.closing[n]:
            if states[c] is NodeState.COMPUTE and states[p] is NodeState.PRUNE:
                return False
        return True

    def walk(self) -> Iterator[dict[NodeId, NodeState]]:
        states: dict[NodeId, NodeState] = {}

        def rec(i: int) -> Iterator[dict[NodeId, NodeState]]:
            if i == len(self.order):
                yield dict(states)
                return
            n = self.order[i]
            for state in self.allowed[n]:
                states[n] = state
                if self.consistent(states, n):
                    yield from rec(i + 1)
                del states[n]

        yield from rec(0)


def iter_feasible_states(dag: WorkflowDag, metrics: Mapping[NodeId, OperatorMetrics], changeset: ChangeSet | None, *, max_nodes: int = OEP_MAX_NODES) -> Iterator[dict[NodeId, NodeState]]:
    """Every assignment honoring originals, parent-state rules, output pinning and load availability."""
    _check_bound(len(dag), max_nodes, "nodes")
    yield from _Search(dag, metrics, changeset).walk()


def brute_force_oep(
    dag: WorkflowDag,
    metrics: Mapping[NodeId, OperatorMetrics],
    changeset: ChangeSet | None,
    *,
    max_nodes: int = OEP_MAX_NODES,
) -> tuple[int, dict[NodeId, NodeState]]:
    """Exact minimum plan cost with the lexicographically smallest optimal witness."""
    _check_bound(len(dag), max_nodes, "nodes")
    search = _Search(dag, metrics, changeset)
    order = search.order
    # suffix[i]: cheapest possible cost of nodes order[i:], ignoring edges.
    suffix = [0] * (len(order) + 1)
    for i in range(len(order) - 1, -1, -1):
        n = order[i]
        cheapest = min((_state_cost(metrics[n], s) for s in search.allowed[n]), default=0)
        suffix[i] = suffix[i + 1] + cheapest

    best_cost: int | None = None
    best: dict[NodeId, NodeState] = {}
    states: dict[NodeId, NodeState] = {}

    def rec(i: int, cost: int) -> None:
        nonlocal best_cost, best
        if best_cost is not None and cost + suffix[i] >= best_cost:
            return
        if i == len(order):
            best_cost, best = cost, dict(states)
            return
        n = order[i]
        for state in search.allowed[n]:
            states[n] = state
            if search.consistent(states, n):
                rec(i + 1, cost + _state_cost(metrics[n], state))
            del states[n]

    rec(0, 0)
    if best_cost is None:
        # Unreachable on a valid DAG: computing every node is always feasible.
        raise EnumerationBoundError("no feasible assignment")
    return best_cost, best


def brute_force_oep_perturbed(
    dag: WorkflowDag,
    metrics: Mapping[NodeId, OperatorMetrics],
    changeset: ChangeSet | None,
    *,
    max_nodes: int = OEP_MAX_NODES,
) -> tuple[int, dict[NodeId, NodeState]]:
    """Minimum with originals free but costed inf/0/-eps for Load/Prune/Compute.

    The infinitesimal is kept symbolic: assignments are ranked by (finite cost,
    -number of computed originals). Returns the finite part of the true plan cost.
    """
    _check_bound(len(dag), max_nodes, "nodes")
    search = _Search(dag, metrics, changeset, pin_originals=False)
    original = search.original
    best_key: tuple[int, int] | None = None
    best: dict[NodeId, NodeState] = {}
    for states in search.walk():
        finite = sum(_state_cost(metrics[n], s) for n, s in states.items() if n not in original)
        eps = sum(1 for n in original if states[n] is NodeState.COMPUTE)
        key = (finite, -eps)
        if best_key is None or key < best_key:
            best_key, best = key, states
    if best_key is None:
        raise EnumerationBoundError("no feasible assignment")
    return sum(_state_cost(metrics[n], s) for n, s in best.items()), best


@dataclass(frozen=True)
class IlpAssignment:
    x_a: Mapping[NodeId, int]
    x_b: Mapping[NodeId, int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "x_a", MappingProxyType(dict(self.x_a)))
        object.__setattr__(self, "x_b", MappingProxyType(dict(self.x_b)))


def ilp_from_states(states: Mapping[NodeId, NodeState]) -> IlpAssignment:
    return IlpAssignment(
        x_a={n: int(s is not NodeState.PRUNE) for n, s in states.items()},
        x_b={n: int(s is NodeState.COMPUTE) for n, s in states.items()},
    )


def states_from_ilp(assignment: IlpAssignment) -> dict[NodeId, NodeState]:
    out = {}
    for n, a in assignment.x_a.items():
        b = assignment.x_b.get(n, 0)
        out[n] = NodeState.COMPUTE if b else NodeState.LOAD if a else NodeState.PRUNE
    return out


def ilp_is_feasible(dag: WorkflowDag, assignment: IlpAssignment) -> bool:
    """x_a >= x_b per node, and x_b of a child never exceeds x_a of any parent."""
    for n in dag.node_ids:
        if assignment.x_b[n] > assignment.x_a[n]:
            return False
    return all(assignment.x_b[c] <= assignment.x_a[p] for p, c in dag.edges())


def ilp_objective(dag: WorkflowDag, metrics: Mapping[NodeId, OperatorMetrics], assignment: IlpAssignment, *, unavailable_load: int = 0) -> int:
    """sum x_a*l + x_b*(c - l); `unavailable_load` stands in for an infinite l and cancels when x_a = x_b."""
    total = 0
    for n in dag.node_ids:
        m = metrics[n]
        load = m.load_ms if m.loadable else unavailable_load
        total += assignment.x_a[n] * load + assignment.x_b[n] * (m.compute_ms - load)
    return total


def brute_force_closure(psp: PspInstance, *, max_projects: int = CLOSURE_MAX_PROJECTS) -> tuple[int, frozenset[ProjectId]]:
    """Maximum-profit closed selection containing the forced projects; ties prefer fewer projects."""
    free = sorted(p for p in psp.projects if p not in psp.forced)
    _check_bound(len(free), max_projects, "free projects")
    best: tuple[int, int, tuple[ProjectId, ...]] | None = None
    for mask in range(1 << len(free)):
        chosen = set(psp.forced) | {free[i] for i in range(len(free)) if mask >> i & 1}
        if not psp.is_closed(chosen):
            continue
        key = (-psp.total_profit(chosen), len(chosen), tuple(sorted(chosen)))
        if best is None or key < best:
            best = key
    assert best is not None
    return -best[0], frozenset(best[2])


def brute_force_min_cut(net: FlowNetwork, *, max_vertices: int = CUT_MAX_VERTICES) -> int:
    """Minimum finite s-t cut capacity over every partition of the inner vertices."""
    inner = sorted(v for v in net.vertices if v not in (net.source, net.sink))
    _check_bound(len(inner), max_vertices, "inner vertices")
    best: int | None = None
    for mask in range(1 << len(inner)):
        side = {net.source} | {inner[i] for i in range(len(inner)) if mask >> i & 1}
        cap = net.cut_capacity(side)
        if cap is UNBOUNDED:
            continue
        if best is None or cap < best:
            best = cap
    assert best is not None
    return best


OepSolver = Callable[[WorkflowDag, Mapping[NodeId, OperatorMetrics], "ChangeSet | None"], ExecutionPlan]


def brute_force_solver(dag: WorkflowDag, metrics: Mapping[NodeId, OperatorMetrics], changeset: ChangeSet | None) -> ExecutionPlan:
    cost, states = brute_force_oep(dag, metrics, changeset)
    return ExecutionPlan(states=states, cost_ms=cost)


def brute_force_omp(
    dag: WorkflowDag,
    metrics: Mapping[NodeId, OperatorMetrics],
    budget_bytes: int,
    *,
    solver: OepSolver = optimal_plan,
    max_nodes: int = OEP_MAX_NODES,
) -> tuple[int, frozenset[NodeId]]:
    """Minimum T_M over every budget-feasible materialization set, assuming an identical next iteration.

    `metrics` carries the load time each node would have if stored. Ties prefer
    smaller sets, then the lexicographically smallest.
    """
    _check_bound(len(dag), max_nodes, "nodes")
    candidates = [n for n in dag.node_ids if dag.nodes[n].kind is not NodeKind.SOURCE and metrics[n].loadable]
    best: tuple[int, int, tuple[NodeId, ...]] | None = None
    for k in range(len(candidates) + 1):
        for subset in combinations(candidates, k):
            if subset and (budget_bytes <= 0 or sum(metrics[n].size_bytes for n in subset) > budget_bytes):
                continue
            t_m = materialization_runtime(dag, metrics, subset, solver=solver)
            key = (t_m, len(subset), subset)
            if best is None or key < best:
                best = key
    assert best is not None
    return best[0], frozenset(best[2])
