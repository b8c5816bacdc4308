from __future__ import annotations

"""Streaming materialization decisions under a storage budget, plus the T_M objective."""

import logging
import threading
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterable, Mapping, Protocol

from dagreuse.core.errors import ConfigError, PlanError
from dagreuse.tracking.signatures import ChangeSet, Signature
from dagreuse.workflow.dag import (
    INFINITE,
    ExecutionPlan,
    NodeId,
    NodeKind,
    OperatorMetrics,
    WorkflowDag,
)

from .psp import optimal_plan

logger = logging.getLogger(__name__)


class MatPolicy(str, Enum):
    STREAMING_HEURISTIC = "opt"
    ALWAYS_MATERIALIZE = "am"
    NEVER_MATERIALIZE = "nm"

    @classmethod
    def parse(cls, name: "str | MatPolicy") -> "MatPolicy":
        if isinstance(name, MatPolicy):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            valid = ", ".join(p.value for p in cls)
            raise ConfigError(f"unknown policy {name!r} (expected one of: {valid})") from None


class Decision(str, Enum):
    MATERIALIZE = "Materialize"
    DISCARD = "Discard"


@dataclass(frozen=True)
class LedgerEntry:
    node_id: NodeId
    signature: Signature
    size_bytes: int
    created_iteration: int = 0


class BudgetLedger:
    """Stored bytes against the budget; the single serialized decision point of a run."""

    def __init__(self, budget_bytes: int, entries: Iterable[LedgerEntry] = ()):
        if budget_bytes < 0:
            raise ValueError("budget_bytes must be >= 0")
        self.budget_bytes = int(budget_bytes)
        self._entries: dict[Signature, LedgerEntry] = {e.signature: e for e in entries}
        self._lock = threading.Lock()

    @property
    def entries(self) -> tuple[LedgerEntry, ...]:
        return tuple(sorted(self._entries.values(), key=lambda e: (e.node_id, e.signature)))

    @property
    def used_bytes(self) -> int:
        return sum(e.size_bytes for e in self._entries.values())

    @property
    def remaining_bytes(self) -> int:
        return self.budget_bytes - self.used_bytes

    def __contains__(self, signature: object) -> bool:
        return signature in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def admits(self, size_bytes: int) -> bool:
        # A zero budget disables materialization outright, including empty outputs.
        return self.budget_bytes > 0 and size_bytes <= self.remaining_bytes

    def try_admit(self, entry: LedgerEntry) -> bool:
        """Reserve room for `entry`; an already stored signature is a free hit."""
        with self._lock:
            if entry.signature in self._entries:
                return True
            if not self.admits(entry.size_bytes):
                return False
            self._entries[entry.signature] = entry
            assert self.used_bytes <= self.budget_bytes
            return True

    def release(self, signature: Signature) -> LedgerEntry | None:
        with self._lock:
            return self._entries.pop(signature, None)

    def snapshot(self) -> dict:
        return {
            "budget_bytes": self.budget_bytes,
            "used_bytes": self.used_bytes,
            "entries": [
                {"node_id": e.node_id, "signature": e.signature, "size_bytes": e.size_bytes, "created_iteration": e.created_iteration}
                for e in self.entries
            ],
        }


class StoredEntry(Protocol):
    signature: str
    node_id: str
    size_bytes: int
    created_iteration: int


class EntryRemover(Protocol):
    def remove(self, signature: str) -> bool: ...


def ledger_from_entries(budget_bytes: int, stored: Iterable[StoredEntry]) -> tuple[BudgetLedger, list[LedgerEntry]]:
    """Ledger over existing artifacts; evicts oldest entries first if they overflow the budget."""
    entries = [LedgerEntry(e.node_id, Signature(e.signature), e.size_bytes, e.created_iteration) for e in stored]
    entries.sort(key=lambda e: (e.created_iteration, e.node_id, e.signature))
    evicted: list[LedgerEntry] = []
    total = sum(e.size_bytes for e in entries)
    while entries and total > budget_bytes:
        victim = entries.pop(0)
        total -= victim.size_bytes
        evicted.append(victim)
    if evicted:
        logger.warning(
            "stored artifacts exceed budget of %d bytes; evicting %d oldest entr%s",
            budget_bytes,
            len(evicted),
            "y" if len(evicted) == 1 else "ies",
        )
    return BudgetLedger(budget_bytes, entries), evicted


def purge_stale(ledger: BudgetLedger, changeset: ChangeSet, remover: EntryRemover | None = None) -> tuple[BudgetLedger, list[LedgerEntry]]:
    """Drop entries no equivalent node of the new version can use (original or removed nodes)."""
    live = set(changeset.equivalent.values())
    kept: list[LedgerEntry] = []
    purged: list[LedgerEntry] = []
    for entry in ledger.entries:
        if entry.signature in live:
            kept.append(entry)
        else:
            purged.append(entry)
    for entry in purged:
        if remover is not None:
            remover.remove(entry.signature)
        logger.info("purged stale materialization of %s (%s)", entry.node_id, entry.signature[:12])
    if not purged:
        return ledger, []
    return BudgetLedger(ledger.budget_bytes, kept), purged


def cumulative_runtime(dag: WorkflowDag, plan_times: Mapping[NodeId, int], node: NodeId) -> int:
    """C(n): realized time of `node` plus every ancestor's, each ancestor counted once."""
    if node not in dag.nodes:
        raise PlanError(f"unknown node {node}")
    total = 0
    for n in (node, *sorted(dag.ancestors(node))):
        if n not in plan_times:
            raise PlanError(f"no realized time for {n}")
        total += plan_times[n]
    return total


@dataclass(frozen=True)
class MatDecision:
    node: NodeId
    decision: Decision
    reason: str
    capped: bool = False

    @property
    def materialize(self) -> bool:
        return self.decision is Decision.MATERIALIZE


def on_out_of_scope(
    node: NodeId,
    c_ms: int,
    l_ms: int,
    ledger: BudgetLedger,
    policy: MatPolicy,
    *,
    signature: Signature,
    size_bytes: int,
    kind: NodeKind = NodeKind.DPR,
    iteration: int = 0,
) -> MatDecision:
    """One decision for a computed node whose children have all completed."""
    policy = MatPolicy.parse(policy)
    if kind is NodeKind.SOURCE:
        return MatDecision(node, Decision.DISCARD, "source")
    if policy is MatPolicy.NEVER_MATERIALIZE:
        return MatDecision(node, Decision.DISCARD, "policy")
    if policy is MatPolicy.STREAMING_HEURISTIC and not c_ms > 2 * l_ms:
        return MatDecision(node, Decision.DISCARD, "cost")

    entry = LedgerEntry(node, signature, size_bytes, iteration)
    if ledger.try_admit(entry):
        return MatDecision(node, Decision.MATERIALIZE, "admitted")
    capped = policy is MatPolicy.ALWAYS_MATERIALIZE
    if capped:
        logger.warning("always-materialize hit the budget at %s (%d bytes, %d free)", node, size_bytes, ledger.remaining_bytes)
    return MatDecision(node, Decision.DISCARD, "budget", capped=capped)


@dataclass(frozen=True)
class DecisionRecord:
    iteration: int
    node: NodeId
    signature: str
    c_ms: int
    l_ms: int
    size_bytes: int
    decision: Decision
    reason: str
    used_bytes: int
    write_ms: int = 0
    at_ms: int = 0

    def to_json(self) -> dict:
        return {
            "iteration": self.iteration,
            "node": self.node,
            "signature": self.signature,
            "C_ms": self.c_ms,
            "l_ms": self.l_ms,
            "size_bytes": self.size_bytes,
            "decision": self.decision.value,
            "reason": self.reason,
            "used_bytes": self.used_bytes,
            "write_ms": self.write_ms,
            "at_ms": self.at_ms,
        }


@dataclass
class StreamingMaterializer:
    """Applies a policy to out-of-scope events and keeps the ordered decision log."""

    ledger: BudgetLedger
    policy: MatPolicy
    iteration: int = 0
    records: list[DecisionRecord] = field(default_factory=list)
    capped: bool = False

    def decide(
        self,
        node: NodeId,
        *,
        c_ms: int,
        l_ms: int,
        signature: Signature,
        size_bytes: int,
        kind: NodeKind,
        at_ms: int = 0,
    ) -> MatDecision:
        if any(r.node == node for r in self.records):
            raise PlanError(f"second materialization decision for {node}")
        result = on_out_of_scope(
            node,
            c_ms,
            l_ms,
            self.ledger,
            self.policy,
            signature=signature,
            size_bytes=size_bytes,
            kind=kind,
            iteration=self.iteration,
        )
        self.capped = self.capped or result.capped
        self.records.append(
            DecisionRecord(
                iteration=self.iteration,
                node=node,
                signature=signature,
                c_ms=c_ms,
                l_ms=l_ms,
                size_bytes=size_bytes,
                decision=result.decision,
                reason=result.reason,
                used_bytes=self.ledger.used_bytes,
                at_ms=at_ms,
            )
        )
        return result

    def record_write(self, node: NodeId, write_ms: int) -> None:
        for i, r in enumerate(self.records):
            if r.node == node:
                self.records[i] = replace(r, write_ms=int(write_ms))
                return
        raise PlanError(f"no decision recorded for {node}")

    def retract(self, node: NodeId) -> None:
        """Undo an admitted materialization whose artifact could not be written."""
        for i, r in enumerate(self.records):
            if r.node == node and r.decision is Decision.MATERIALIZE:
                self.ledger.release(Signature(r.signature))
                self.records[i] = replace(r, decision=Decision.DISCARD, reason="write-failed", used_bytes=self.ledger.used_bytes)
                return

    @property
    def materialized(self) -> list[NodeId]:
        return [r.node for r in self.records if r.decision is Decision.MATERIALIZE]

    @property
    def write_ms(self) -> int:
        return sum(r.write_ms for r in self.records)


Solver = Callable[[WorkflowDag, Mapping[NodeId, OperatorMetrics], "ChangeSet | None"], ExecutionPlan]


def next_iteration_metrics(dag: WorkflowDag, metrics: Mapping[NodeId, OperatorMetrics], materialized: Iterable[NodeId]) -> dict[NodeId, OperatorMetrics]:
    """Metrics of an identical next iteration in which only `materialized` (and sources) are loadable."""
    chosen = set(materialized)
    out: dict[NodeId, OperatorMetrics] = {}
    for n in dag.node_ids:
        m = metrics[n]
        if dag.nodes[n].kind is NodeKind.SOURCE:
            out[n] = m.with_load(m.compute_ms)
        elif n in chosen:
            if not m.loadable:
                raise PlanError(f"materialized node {n} has no load time")
            out[n] = m
        else:
            out[n] = m.with_load(INFINITE)
    return out


def materialization_runtime(
    dag: WorkflowDag,
    metrics: Mapping[NodeId, OperatorMetrics],
    materialized: Iterable[NodeId],
    *,
    solver: Solver = optimal_plan,
) -> int:
    """T_M: write time of the materialized set plus T* of an identical next iteration."""
    chosen = sorted(set(materialized))
    unknown = [n for n in chosen if n not in dag.nodes]
    if unknown:
        raise PlanError(f"unknown nodes in materialized set: {', '.join(unknown)}")
    next_metrics = next_iteration_metrics(dag, metrics, chosen)
    write = sum(next_metrics[n].load_ms for n in chosen if dag.nodes[n].kind is not NodeKind.SOURCE)
    return write + solver(dag, next_metrics, None).cost_ms
