from __future__ import annotations

"""0/1 knapsack: the hardness construction for materialization planning and two exact solvers."""

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from dagreuse.core.errors import EnumerationBoundError
from dagreuse.workflow.dag import NodeId, NodeKind, OperatorDecl, OperatorMetrics, WorkflowDag

KNAPSACK_MAX_ITEMS = 20
ROOT_ID = "root"
_CHUNK_BITS = 16


@dataclass(frozen=True)
class KnapsackInstance:
    capacity: int
    items: tuple[tuple[int, int], ...]  # (size, profit)

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple((int(s), int(p)) for s, p in self.items))
        if self.capacity < 0:
            raise ValueError("capacity must be >= 0")
        for i, (s, p) in enumerate(self.items):
            if s <= 0 or p <= 0:
                raise ValueError(f"item {i} must have positive size and profit, got ({s}, {p})")

    @property
    def sizes(self) -> np.ndarray:
        return np.array([s for s, _ in self.items], dtype=np.int64)

    @property
    def profits(self) -> np.ndarray:
        return np.array([p for _, p in self.items], dtype=np.int64)

    def profit_of(self, chosen: Iterable[int]) -> int:
        return sum(self.items[i][1] for i in chosen)

    def size_of(self, chosen: Iterable[int]) -> int:
        return sum(self.items[i][0] for i in chosen)


def item_id(index: int) -> NodeId:
    return f"item{index + 1}"


def item_index(node: NodeId) -> int:
    if not node.startswith("item"):
        raise ValueError(f"not an item node: {node!r}")
    return int(node[len("item"):]) - 1


def knapsack_to_omp(inst: KnapsackInstance, *, scale: int = 1000, epsilon: int = 1) -> tuple[WorkflowDag, dict[NodeId, OperatorMetrics], int]:
    """Flat DAG: a cheap source root feeding one output per item.

    Item i stores s_i * scale bytes (load time equal to its size at one byte per ms)
    and costs (p_i + 2 s_i) * scale to compute; the budget is B * scale. Scaling keeps
    the root's epsilon strictly below every item size in integer milliseconds.
    """
    if epsilon <= 0 or (inst.items and epsilon >= scale * min(s for s, _ in inst.items)):
        raise ValueError("epsilon must be positive and below every scaled item size")
    decls = [OperatorDecl(id=ROOT_ID, kind=NodeKind.SOURCE, code="root", compute_ms=epsilon, size_bytes=epsilon)]
    for i, (s, p) in enumerate(inst.items):
        decls.append(
            OperatorDecl(
                id=item_id(i),
                kind=NodeKind.LI,
                code=f"item {i + 1}",
                inputs=(ROOT_ID,),
                is_output=True,
                compute_ms=(p + 2 * s) * scale,
                size_bytes=s * scale,
            )
        )
    dag = WorkflowDag.from_decls(decls, iteration=0, disk_read_bytes_per_ms=1)
    return dag, dag.declared_metrics(), inst.capacity * scale


def items_from_materialization(materialized: Iterable[NodeId]) -> tuple[int, ...]:
    return tuple(sorted(item_index(n) for n in materialized if n != ROOT_ID))


def brute_force_knapsack(inst: KnapsackInstance, *, max_items: int = KNAPSACK_MAX_ITEMS) -> tuple[int, tuple[int, ...]]:
    """Exact optimum by enumerating all 2^n subsets as bitmasks.

    Witness: highest profit, then smallest total size, then smallest mask.
    """
    n = len(inst.items)
    if n > max_items:
        raise EnumerationBoundError(f"{n} items exceeds the enumeration bound of {max_items}")
    if n == 0:
        return 0, ()
    sizes, profits = inst.sizes, inst.profits
    bits = np.arange(n, dtype=np.int64)
    best: tuple[int, int, int] | None = None  # (-profit, size, mask)
    total = 1 << n
    step = 1 << min(n, _CHUNK_BITS)
    for start in range(0, total, step):
        masks = np.arange(start, min(start + step, total), dtype=np.int64)
        chosen = (masks[:, None] >> bits) & 1
        used = chosen @ sizes
        gain = chosen @ profits
        ok = np.flatnonzero(used <= inst.capacity)
        if ok.size == 0:
            continue
        order = np.lexsort((masks[ok], used[ok], -gain[ok]))
        i = ok[order[0]]
        key = (-int(gain[i]), int(used[i]), int(masks[i]))
        if best is None or key < best:
            best = key
    assert best is not None
    mask = best[2]
    return -best[0], tuple(i for i in range(n) if mask >> i & 1)


def knapsack_dp(inst: KnapsackInstance) -> tuple[int, tuple[int, ...]]:
    """Dynamic program over capacities; independent of the enumeration solver."""
    n, cap = len(inst.items), inst.capacity
    best = np.zeros(cap + 1, dtype=np.int64)
    took = np.zeros((n, cap + 1), dtype=bool)
    for i, (s, p) in enumerate(inst.items):
        if s > cap:
            continue
        candidate = best[: cap + 1 - s] + p
        better = candidate > best[s:]
        took[i, s:] = better
        best[s:] = np.where(better, candidate, best[s:])
    chosen = []
    c = cap
    for i in range(n - 1, -1, -1):
        if took[i, c]:
            chosen.append(i)
            c -= inst.items[i][0]
    return int(best[cap]), tuple(sorted(chosen))
