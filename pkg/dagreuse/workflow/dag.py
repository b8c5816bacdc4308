from __future__ import annotations

"""Workflow DAG model: operator declarations, metrics, plan states and plan checks."""

import heapq
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from types import MappingProxyType
from typing import TYPE_CHECKING, Iterable, Mapping

from dagreuse.core.errors import CycleError, PlanError, WorkflowValidationError

if TYPE_CHECKING:
    from dagreuse.tracking.signatures import ChangeSet

NodeId = str


class NodeKind(str, Enum):
    SOURCE = "Source"
    DPR = "DPR"
    LI = "LI"
    PPR = "PPR"


class Infinite(Enum):
    """Load time of a node with no equivalent materialization."""

    INFINITE = "inf"

    def __str__(self) -> str:
        return "inf"


INFINITE = Infinite.INFINITE
LoadMs = int | Infinite


class NodeState(str, Enum):
    # Declaration order is the enumeration order used by the oracles.
    PRUNE = "Prune"
    LOAD = "Load"
    COMPUTE = "Compute"


def ceil_div(numerator: int, denominator: int) -> int:
    return -(-numerator // denominator)


def load_ms_for_size(size_bytes: int, disk_read_bytes_per_ms: int) -> int:
    if disk_read_bytes_per_ms <= 0:
        raise ValueError("disk_read_bytes_per_ms must be > 0")
    return ceil_div(int(size_bytes), int(disk_read_bytes_per_ms))


@dataclass(frozen=True)
class OperatorDecl:
    id: NodeId
    kind: NodeKind
    code: str
    inputs: tuple[NodeId, ...] = ()
    is_output: bool = False
    # Declared ground truth for the simulated executor; not part of the signature.
    compute_ms: int = 0
    size_bytes: int = 0
    command: str | None = None

    def with_code(self, code: str) -> "OperatorDecl":
        return replace(self, code=code)


@dataclass(frozen=True)
class OperatorMetrics:
    compute_ms: int
    load_ms: LoadMs
    size_bytes: int

    @property
    def loadable(self) -> bool:
        return self.load_ms is not INFINITE

    def with_load(self, load_ms: LoadMs) -> "OperatorMetrics":
        return replace(self, load_ms=load_ms)


@dataclass(frozen=True)
class WorkflowDag:
    nodes: Mapping[NodeId, OperatorDecl]
    iteration: int = 0
    disk_read_bytes_per_ms: int = 100_000

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", MappingProxyType(dict(self.nodes)))

    @classmethod
    def from_decls(cls, decls: Iterable[OperatorDecl], *, iteration: int = 0, disk_read_bytes_per_ms: int = 100_000) -> "WorkflowDag":
        return cls({d.id: d for d in decls}, iteration=iteration, disk_read_bytes_per_ms=disk_read_bytes_per_ms)

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, node_id: object) -> bool:
        return node_id in self.nodes

    @cached_property
    def node_ids(self) -> tuple[NodeId, ...]:
        return tuple(sorted(self.nodes))

    @cached_property
    def outputs(self) -> tuple[NodeId, ...]:
        return tuple(n for n in self.node_ids if self.nodes[n].is_output)

    @cached_property
    def _children(self) -> Mapping[NodeId, tuple[NodeId, ...]]:
        children: dict[NodeId, list[NodeId]] = {n: [] for n in self.nodes}
        for n in self.node_ids:
            for p in dict.fromkeys(self.nodes[n].inputs):
                if p in children:
                    children[p].append(n)
        return MappingProxyType({n: tuple(c) for n, c in children.items()})

    def parents(self, node_id: NodeId) -> tuple[NodeId, ...]:
        """Distinct existing parents, in declared input order."""
        return tuple(p for p in dict.fromkeys(self.nodes[node_id].inputs) if p in self.nodes)

    def children(self, node_id: NodeId) -> tuple[NodeId, ...]:
        return self._children[node_id]

    def edges(self) -> list[tuple[NodeId, NodeId]]:
        return [(p, n) for n in self.node_ids for p in self.parents(n)]

    def ancestors(self, node_id: NodeId) -> set[NodeId]:
        return _reach(node_id, self.parents)

    def descendants(self, node_id: NodeId) -> set[NodeId]:
        return _reach(node_id, self.children)

    def with_iteration(self, iteration: int) -> "WorkflowDag":
        return replace(self, iteration=iteration)

    def with_node(self, decl: OperatorDecl) -> "WorkflowDag":
        nodes = dict(self.nodes)
        nodes[decl.id] = decl
        return replace(self, nodes=nodes)

    def restricted_to(self, keep: Iterable[NodeId]) -> "WorkflowDag":
        keep = set(keep)
        return replace(self, nodes={n: d for n, d in self.nodes.items() if n in keep})

    def declared_metrics(self) -> dict[NodeId, OperatorMetrics]:
        """Metrics as if every node had an equivalent materialization (sources pinned to compute)."""
        out = {}
        for n, d in self.nodes.items():
            load = d.compute_ms if d.kind is NodeKind.SOURCE else load_ms_for_size(d.size_bytes, self.disk_read_bytes_per_ms)
            out[n] = OperatorMetrics(compute_ms=d.compute_ms, load_ms=load, size_bytes=d.size_bytes)
        return out


def _reach(start: NodeId, step) -> set[NodeId]:
    seen: set[NodeId] = set()
    queue = deque(step(start))
    while queue:
        n = queue.popleft()
        if n in seen:
            continue
        seen.add(n)
        queue.extend(step(n))
    return seen


@dataclass(frozen=True)
class Finding:
    kind: str
    message: str
    nodes: tuple[NodeId, ...] = ()


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.findings

    def messages(self) -> list[str]:
        return [f.message for f in self.findings]

    def __str__(self) -> str:
        return "; ".join(self.messages()) if self.findings else "ok"


def _cycles(dag: WorkflowDag) -> list[list[NodeId]]:
    """Strongly connected components that contain a cycle (Kosaraju, iterative)."""
    order: list[NodeId] = []
    visited: set[NodeId] = set()
    for root in dag.node_ids:
        if root in visited:
            continue
        visited.add(root)
        stack = [(root, iter(dag.children(root)))]
        while stack:
            node, it = stack[-1]
            nxt = next((c for c in it if c not in visited), None)
            if nxt is None:
                stack.pop()
                order.append(node)
            else:
                visited.add(nxt)
                stack.append((nxt, iter(dag.children(nxt))))

    assigned: set[NodeId] = set()
    cycles: list[list[NodeId]] = []
    for root in reversed(order):
        if root in assigned:
            continue
        component = []
        stack = [root]
        assigned.add(root)
        while stack:
            node = stack.pop()
            component.append(node)
            for p in dag.parents(node):
                if p not in assigned:
                    assigned.add(p)
                    stack.append(p)
        if len(component) > 1 or root in dag.parents(root):
            cycles.append(sorted(component))
    return sorted(cycles)


def validate(dag: WorkflowDag) -> ValidationReport:
    findings: list[Finding] = []
    if not dag.outputs:
        findings.append(Finding("no-output", "no output node"))
    for n in dag.node_ids:
        decl = dag.nodes[n]
        if not n:
            findings.append(Finding("empty-id", "node with empty id"))
        if decl.kind is NodeKind.SOURCE and decl.inputs:
            findings.append(Finding("source-inputs", f"source node {n} has inputs", (n,)))
        for p in decl.inputs:
            if p not in dag.nodes:
                findings.append(Finding("dangling", f"dangling input {p} of {n}", (n, p)))
    for cycle in _cycles(dag):
        findings.append(Finding("cycle", "cycle {" + ",".join(cycle) + "}", tuple(cycle)))
    return ValidationReport(tuple(findings))


def require_valid(dag: WorkflowDag) -> None:
    report = validate(dag)
    if not report.ok:
        raise WorkflowValidationError(report)


def topological_order(dag: WorkflowDag) -> list[NodeId]:
    """Kahn's algorithm; ready ties are released in ascending NodeId order."""
    indegree = {n: len(dag.parents(n)) for n in dag.node_ids}
    ready = [n for n, d in indegree.items() if d == 0]
    heapq.heapify(ready)
    order: list[NodeId] = []
    while ready:
        n = heapq.heappop(ready)
        order.append(n)
        for c in dag.children(n):
            indegree[c] -= 1
            if indegree[c] == 0:
                heapq.heappush(ready, c)
    if len(order) != len(dag):
        cycles = _cycles(dag)
        raise CycleError(cycles[0] if cycles else sorted(set(dag.node_ids) - set(order)))
    return order


def slice_to_outputs(dag: WorkflowDag) -> WorkflowDag:
    """Keep only the nodes that reach an output through reverse traversal."""
    if not dag.outputs:
        raise WorkflowValidationError(ValidationReport((Finding("no-output", "no output node"),)))
    keep = set(dag.outputs)
    for out in dag.outputs:
        keep |= dag.ancestors(out)
    if len(keep) == len(dag):
        return dag
    return dag.restricted_to(keep)


def plan_cost(dag: WorkflowDag, metrics: Mapping[NodeId, OperatorMetrics], states: Mapping[NodeId, NodeState]) -> int:
    total = 0
    for n in dag.node_ids:
        if n not in states:
            raise PlanError(f"no state for node {n}")
        state = states[n]
        if state is NodeState.COMPUTE:
            total += metrics[n].compute_ms
        elif state is NodeState.LOAD:
            if not metrics[n].loadable:
                raise PlanError(f"load of unmaterialized node {n}")
            total += metrics[n].load_ms
    return total


@dataclass(frozen=True)
class Violation:
    node: NodeId
    rule: str
    message: str


def check_plan(dag: WorkflowDag, changeset: "ChangeSet | None", states: Mapping[NodeId, NodeState]) -> list[Violation]:
    original = changeset.original if changeset is not None else frozenset()
    violations: list[Violation] = []
    for n in dag.node_ids:
        state = states.get(n)
        if state is None:
            violations.append(Violation(n, "missing-state", f"{n} has no state"))
            continue
        if n in original and state is not NodeState.COMPUTE:
            violations.append(Violation(n, "original-not-computed", f"original node {n} is {state.value}"))
        if state is NodeState.COMPUTE:
            for p in dag.parents(n):
                if states.get(p) is NodeState.PRUNE:
                    violations.append(Violation(n, "pruned-parent", f"{n} is computed but parent {p} is pruned"))
    return violations


@dataclass(frozen=True)
class ExecutionPlan:
    states: Mapping[NodeId, NodeState]
    cost_ms: int
    summary: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", MappingProxyType(dict(self.states)))
        object.__setattr__(self, "summary", MappingProxyType(dict(self.summary)))

    def nodes_in(self, state: NodeState) -> list[NodeId]:
        return sorted(n for n, s in self.states.items() if s is state)

    def count(self, state: NodeState) -> int:
        return sum(1 for s in self.states.values() if s is state)
