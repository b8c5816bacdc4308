from __future__ import annotations

"""Seeded random instances shared by the property suites and `verify --random`."""

from dataclasses import dataclass

import numpy as np

from dagreuse.optimizer.flow import FlowNetwork
from dagreuse.tracking.signatures import ChangeSet, Signature
from dagreuse.workflow.dag import (
    INFINITE,
    NodeId,
    NodeKind,
    OperatorDecl,
    OperatorMetrics,
    WorkflowDag,
)

from .knapsack import KnapsackInstance

_INNER_KINDS = (NodeKind.DPR, NodeKind.LI, NodeKind.PPR)


@dataclass(frozen=True)
class OepInstance:
    dag: WorkflowDag
    metrics: dict[NodeId, OperatorMetrics]
    changeset: ChangeSet


def node_name(i: int) -> NodeId:
    return f"n{i:03d}"


def random_dag(
    rng: np.random.Generator,
    n_nodes: int,
    *,
    edge_prob: float = 0.3,
    max_parents: int = 3,
    cost_range: tuple[int, int] = (1, 100),
    disk_read_bytes_per_ms: int = 1,
) -> WorkflowDag:
    """Edges only run from lower to higher index; every sink is an output."""
    lo, hi = cost_range
    parents: dict[int, list[int]] = {}
    for j in range(n_nodes):
        earlier = [i for i in range(j) if rng.random() < edge_prob]
        if len(earlier) > max_parents:
            earlier = sorted(int(x) for x in rng.choice(earlier, size=max_parents, replace=False))
        parents[j] = earlier
    has_child = {i for ps in parents.values() for i in ps}
    decls = []
    for j in range(n_nodes):
        if parents[j]:
            kind = _INNER_KINDS[int(rng.integers(0, len(_INNER_KINDS)))]
        else:
            kind = NodeKind.SOURCE if rng.random() < 0.5 else NodeKind.DPR
        load = int(rng.integers(lo, hi, endpoint=True))
        decls.append(
            OperatorDecl(
                id=node_name(j),
                kind=kind,
                code=f"op{j}",
                inputs=tuple(node_name(i) for i in parents[j]),
                is_output=j not in has_child or rng.random() < 0.1,
                compute_ms=int(rng.integers(lo, hi, endpoint=True)),
                size_bytes=load * disk_read_bytes_per_ms,
            )
        )
    return WorkflowDag.from_decls(decls, iteration=0, disk_read_bytes_per_ms=disk_read_bytes_per_ms)


def random_oep_instance(
    rng: np.random.Generator,
    *,
    max_nodes: int = 12,
    min_nodes: int = 1,
    available_prob: float = 0.5,
    original_prob: float = 0.15,
    edge_prob: float = 0.3,
) -> OepInstance:
    """Random DAG with random availability and a descendant-closed original set."""
    n = int(rng.integers(min_nodes, max_nodes, endpoint=True))
    dag = random_dag(rng, n, edge_prob=edge_prob)
    seeds = {v for v in dag.node_ids if dag.nodes[v].kind is not NodeKind.SOURCE and rng.random() < original_prob}
    original = set(seeds)
    for v in seeds:
        original |= dag.descendants(v)
    metrics: dict[NodeId, OperatorMetrics] = {}
    for v, m in dag.declared_metrics().items():
        if dag.nodes[v].kind is NodeKind.SOURCE:
            metrics[v] = m
        elif v in original or rng.random() >= available_prob:
            metrics[v] = m.with_load(INFINITE)
        else:
            metrics[v] = m
    changeset = ChangeSet(
        original=frozenset(original),
        equivalent={v: Signature(f"sig-{v}") for v in dag.node_ids if v not in original},
        self_modified=frozenset(seeds),
    )
    return OepInstance(dag=dag, metrics=metrics, changeset=changeset)


def random_flow_network(rng: np.random.Generator, *, max_vertices: int = 10, max_capacity: int = 20, arc_prob: float = 0.4) -> FlowNetwork[int]:
    n = int(rng.integers(2, max_vertices, endpoint=True))
    net: FlowNetwork[int] = FlowNetwork(source=0, sink=n - 1, vertices=set(range(n)))
    for u in range(n):
        for v in range(n):
            if u == v or v == 0 or u == n - 1:
                continue
            if rng.random() < arc_prob:
                net.add_arc(u, v, int(rng.integers(0, max_capacity, endpoint=True)))
    return net


def random_knapsack(rng: np.random.Generator, *, max_items: int = 12, max_size: int = 10, max_profit: int = 20) -> KnapsackInstance:
    n = int(rng.integers(1, max_items, endpoint=True))
    items = tuple((int(rng.integers(1, max_size, endpoint=True)), int(rng.integers(1, max_profit, endpoint=True))) for _ in range(n))
    total = sum(s for s, _ in items)
    return KnapsackInstance(capacity=int(rng.integers(0, total, endpoint=True)), items=items)
