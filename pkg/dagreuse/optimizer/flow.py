from __future__ import annotations

"""Flow networks and Edmonds-Karp max-flow with a minimum-cut readout."""

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Generic, Hashable, TypeVar

V = TypeVar("V", bound=Hashable)


class Unbounded(Enum):
    UNBOUNDED = "inf"

    def __str__(self) -> str:
        return "inf"


UNBOUNDED = Unbounded.UNBOUNDED
Capacity = int | Unbounded


@dataclass
class FlowNetwork(Generic[V]):
    source: V
    sink: V
    vertices: set[V] = field(default_factory=set)
    arcs: list[tuple[V, V, Capacity]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.source == self.sink:
            raise ValueError("source and sink must differ")
        self.vertices = set(self.vertices) | {self.source, self.sink}

    def add_vertex(self, v: V) -> None:
        self.vertices.add(v)

    def add_arc(self, u: V, v: V, capacity: Capacity) -> None:
        if v == self.source:
            raise ValueError(f"arc into source: {u!r} -> {v!r}")
        if u == self.sink:
            raise ValueError(f"arc out of sink: {u!r} -> {v!r}")
        if capacity is not UNBOUNDED and capacity < 0:
            raise ValueError(f"negative capacity on {u!r} -> {v!r}")
        self.vertices.update((u, v))
        self.arcs.append((u, v, capacity))

    def unbounded_capacity(self) -> int:
        """Finite stand-in for UNBOUNDED: exceeds every cut made only of finite arcs."""
        return 1 + sum(c for _, _, c in self.arcs if c is not UNBOUNDED)

    def cut_capacity(self, source_side: set[V]) -> int | Unbounded:
        total = 0
        for u, v, c in self.arcs:
            if u in source_side and v not in source_side:
                if c is UNBOUNDED:
                    return UNBOUNDED
                total += c
        return total


@dataclass(frozen=True)
class MaxFlowResult(Generic[V]):
    flow_value: int
    min_cut_source_side: frozenset[V]


class _Residual:
    """Arc i and its reverse arc i ^ 1 share one slot pair in flat arrays."""

    def __init__(self, n: int):
        self.head: list[int] = []
        self.cap: list[int] = []
        self.adj: list[list[int]] = [[] for _ in range(n)]

    def add(self, u: int, v: int, cap: int) -> None:
        self.adj[u].append(len(self.head))
        self.head.append(v)
        self.cap.append(cap)
        self.adj[v].append(len(self.head))
        self.head.append(u)
        self.cap.append(0)

    def freeze_order(self) -> None:
        # BFS visits neighbours by ascending vertex index.
        for arcs in self.adj:
            arcs.sort(key=lambda e: (self.head[e], e))

    def bfs(self, s: int) -> list[int]:
        parent_arc = [-1] * len(self.adj)
        seen = [False] * len(self.adj)
        seen[s] = True
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for e in self.adj[u]:
                v = self.head[e]
                if not seen[v] and self.cap[e] > 0:
                    seen[v] = True
                    parent_arc[v] = e
                    queue.append(v)
        return [e if seen[v] else -2 for v, e in enumerate(parent_arc)]


def max_flow(net: FlowNetwork[V]) -> MaxFlowResult[V]:
    order = sorted(net.vertices)
    index = {v: i for i, v in enumerate(order)}
    s, t = index[net.source], index[net.sink]

    big = net.unbounded_capacity()
    residual = _Residual(len(order))
    for u, v, c in net.arcs:
        residual.add(index[u], index[v], big if c is UNBOUNDED else int(c))
    residual.freeze_order()

    flow = 0
    while True:
        parent = residual.bfs(s)
        if parent[t] == -2:
            break
        bottleneck = None
        v = t
        while v != s:
            e = parent[v]
            bottleneck = residual.cap[e] if bottleneck is None else min(bottleneck, residual.cap[e])
            v = residual.head[e ^ 1]
        v = t
        while v != s:
            e = parent[v]
            residual.cap[e] -= bottleneck
            residual.cap[e ^ 1] += bottleneck
            v = residual.head[e ^ 1]
        flow += bottleneck

    reach = residual.bfs(s)
    source_side = frozenset(order[i] for i, e in enumerate(reach) if e != -2)
    return MaxFlowResult(flow_value=flow, min_cut_source_side=source_side)
