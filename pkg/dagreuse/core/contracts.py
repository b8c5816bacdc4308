from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from dagreuse.engine.store import IterationRecord
from dagreuse.reporting.comparison import ComparisonRow
from dagreuse.reporting.report import DecisionTally, ReportRow
from dagreuse.tracking.signatures import ChangeSet
from dagreuse.workflow.dag import ExecutionPlan, NodeId, OperatorMetrics, WorkflowDag


@dataclass(frozen=True)
class PlanSummary:
    dag: WorkflowDag
    sliced: WorkflowDag
    changeset: ChangeSet
    metrics: Mapping[NodeId, OperatorMetrics]
    plan: ExecutionPlan
    psp_path: Path | None = None


@dataclass(frozen=True)
class SessionSummary:
    records: list[IterationRecord]
    report_csv: Path
    report_json: Path


@dataclass(frozen=True)
class ComparisonSummary:
    rows: list[ComparisonRow]
    runs: int
    report_csv: Path
    report_json: Path


@dataclass(frozen=True)
class ReportSummary:
    rows: list[ReportRow]
    decisions: DecisionTally
    written: tuple[Path, Path] | None = None


@dataclass(frozen=True)
class VerifyCase:
    label: str
    solver_cost: int
    oracle_cost: int
    violations: int = 0
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def agree(self) -> bool:
        return self.solver_cost == self.oracle_cost and self.violations == 0


@dataclass(frozen=True)
class VerifySummary:
    cases: list[VerifyCase]

    @property
    def ok(self) -> bool:
        return all(c.agree for c in self.cases)

    @property
    def mismatches(self) -> list[VerifyCase]:
        return [c for c in self.cases if not c.agree]
