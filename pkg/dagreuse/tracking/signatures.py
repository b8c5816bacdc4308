from __future__ import annotations

"""Merkle signatures over operator declarations, version diffs, and load-time resolution."""

import hashlib
import json
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, NewType, Protocol, Sequence

from dagreuse.workflow.dag import (
    INFINITE,
    NodeId,
    NodeKind,
    OperatorDecl,
    OperatorMetrics,
    WorkflowDag,
    load_ms_for_size,
    topological_order,
)

Signature = NewType("Signature", str)

DEFAULT_ALGORITHM = "sha256"


def signature(node: OperatorDecl, parent_sigs: Sequence[Signature], *, algorithm: str = DEFAULT_ALGORITHM) -> Signature:
    """Digest of the node's code and its parents' signatures, in declared input order."""
    payload = json.dumps({"code": node.code, "inputs": list(parent_sigs)}, separators=(",", ":"), ensure_ascii=False)
    return Signature(hashlib.new(algorithm, payload.encode("utf-8")).hexdigest())


def compute_signatures(dag: WorkflowDag, *, algorithm: str = DEFAULT_ALGORITHM) -> dict[NodeId, Signature]:
    sigs: dict[NodeId, Signature] = {}
    for n in topological_order(dag):
        decl = dag.nodes[n]
        sigs[n] = signature(decl, [sigs[p] for p in decl.inputs if p in sigs], algorithm=algorithm)
    return sigs


@dataclass(frozen=True)
class ChangeSet:
    original: frozenset[NodeId]
    equivalent: Mapping[NodeId, Signature]
    signatures: Mapping[NodeId, Signature] = field(default_factory=dict)
    self_modified: frozenset[NodeId] = frozenset()
    removed: frozenset[NodeId] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "equivalent", MappingProxyType(dict(self.equivalent)))
        object.__setattr__(self, "signatures", MappingProxyType(dict(self.signatures)))

    @property
    def propagated(self) -> frozenset[NodeId]:
        return self.original - self.self_modified

    @property
    def is_empty(self) -> bool:
        return not self.original and not self.removed

    def restricted_to(self, dag: WorkflowDag) -> "ChangeSet":
        keep = set(dag.nodes)
        return ChangeSet(
            original=frozenset(self.original & keep),
            equivalent={n: s for n, s in self.equivalent.items() if n in keep},
            signatures={n: s for n, s in self.signatures.items() if n in keep},
            self_modified=frozenset(self.self_modified & keep),
            removed=self.removed,
        )


def diff(prev: WorkflowDag | None, next_dag: WorkflowDag, *, algorithm: str = DEFAULT_ALGORITHM) -> ChangeSet:
    """A node of `next_dag` is original iff its signature never occurs in `prev`."""
    next_sigs = compute_signatures(next_dag, algorithm=algorithm)
    prev_sigs = compute_signatures(prev, algorithm=algorithm) if prev is not None else {}
    known = set(prev_sigs.values())

    original = frozenset(n for n, s in next_sigs.items() if s not in known)
    equivalent = {n: s for n, s in next_sigs.items() if s in known}

    prev_nodes = prev.nodes if prev is not None else {}
    self_modified = frozenset(
        n
        for n in original
        if n not in prev_nodes
        or prev_nodes[n].code != next_dag.nodes[n].code
        or tuple(prev_nodes[n].inputs) != tuple(next_dag.nodes[n].inputs)
    )
    removed = frozenset(n for n in prev_nodes if n not in next_dag.nodes)
    return ChangeSet(
        original=original,
        equivalent=equivalent,
        signatures=next_sigs,
        self_modified=self_modified,
        removed=removed,
    )


class CatalogEntryView(Protocol):
    size_bytes: int
    load_ms: int


class CatalogView(Protocol):
    def available(self, signature: Signature) -> CatalogEntryView | None: ...


def resolve_load_times(
    dag: WorkflowDag,
    changeset: ChangeSet,
    catalog: CatalogView,
    disk_read_bytes_per_ms: int,
) -> dict[NodeId, OperatorMetrics]:
    """Per-node metrics for this iteration.

    Original nodes (edited sources included) never load; unchanged sources load at
    their compute time; everything else loads only when its signature is stored.
    """
    metrics: dict[NodeId, OperatorMetrics] = {}
    for n in dag.node_ids:
        decl = dag.nodes[n]
        if n in changeset.original:
            metrics[n] = OperatorMetrics(decl.compute_ms, INFINITE, decl.size_bytes)
            continue
        if decl.kind is NodeKind.SOURCE:
            metrics[n] = OperatorMetrics(decl.compute_ms, decl.compute_ms, decl.size_bytes)
            continue
        sig = changeset.equivalent.get(n)
        entry = catalog.available(sig) if sig is not None else None
        if entry is None:
            metrics[n] = OperatorMetrics(decl.compute_ms, INFINITE, decl.size_bytes)
            continue
        load_ms = entry.load_ms if entry.load_ms is not None else load_ms_for_size(entry.size_bytes, disk_read_bytes_per_ms)
        metrics[n] = OperatorMetrics(decl.compute_ms, int(load_ms), entry.size_bytes)
    return metrics
