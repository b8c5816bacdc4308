from __future__ import annotations

"""Iteration history on disk: `history/<t>.json`, `workflows/<t>.json` and `decisions.jsonl`."""

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

from pydantic import TypeAdapter, ValidationError

from dagreuse.config.schema import Paths
from dagreuse.core.errors import CatalogIntegrityError
from dagreuse.core.results import SCHEMA_VERSION, dump_json, load_result_json, write_atomic
from dagreuse.workflow.codec import load_workflow, save_workflow
from dagreuse.workflow.dag import WorkflowDag


@dataclass(frozen=True)
class LoadAudit:
    node: str
    signature: str
    load_ms: int
    original: bool


@dataclass(frozen=True)
class TimelineEvent:
    at_ms: int
    kind: str  # "load", "complete" or "decide"
    node: str


EVENT_RANK = {"load": 0, "complete": 1, "decide": 2}


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    iteration_type: str
    modified_node: str | None
    policy: str
    executor: str
    budget_bytes: int
    changeset: dict[str, list[str]]
    states: dict[str, str]
    predicted_cost_ms: int
    psp_summary: dict[str, int]
    realized_ms: dict[str, int]
    loads: list[LoadAudit]
    decisions: list[dict[str, Any]]
    events: list[TimelineEvent]
    ledger: dict[str, Any]
    purged: list[str]
    evicted: list[str]
    run_ms: int
    mat_time_ms: int
    iteration_ms: int
    cumulative_run_ms: int
    storage_bytes: int
    am_capped: bool
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


_record_adapter = TypeAdapter(IterationRecord)


def record_from_json(data: dict[str, Any]) -> IterationRecord:
    return _record_adapter.validate_python(data)


class RunStore:
    def __init__(self, paths: Paths):
        self.paths = paths

    def history_path(self, t: int) -> Path:
        return self.paths.history_dir / f"{t}.json"

    def workflow_path(self, t: int) -> Path:
        return self.paths.workflows_dir / f"{t}.json"

    def iterations(self) -> list[int]:
        if not self.paths.history_dir.exists():
            return []
        return sorted(int(p.stem) for p in self.paths.history_dir.glob("*.json") if p.stem.isdigit())

    def next_iteration(self) -> int:
        done = self.iterations()
        return done[-1] + 1 if done else 0

    def is_empty(self) -> bool:
        objects = self.paths.objects_dir
        return not self.iterations() and not (objects.exists() and any(objects.iterdir()))

    def latest_workflow(self) -> WorkflowDag | None:
        done = self.iterations()
        if not done:
            return None
        path = self.workflow_path(done[-1])
        if not path.exists():
            raise CatalogIntegrityError(f"history has iteration {done[-1]} but no workflow at {path}")
        return load_workflow(path)

    def last_record(self) -> IterationRecord | None:
        done = self.iterations()
        return self.load_record(done[-1]) if done else None

    def load_record(self, t: int) -> IterationRecord:
        try:
            return record_from_json(load_result_json(self.history_path(t)))
        except (OSError, ValueError, ValidationError) as exc:
            raise CatalogIntegrityError(f"unreadable history record {t}: {exc}") from exc

    def load_history(self) -> list[IterationRecord]:
        return [self.load_record(t) for t in self.iterations()]

    def save(self, record: IterationRecord, dag: WorkflowDag) -> None:
        # Workflow first: a record without its workflow version would break the next diff.
        save_workflow(dag, self.workflow_path(record.iteration))
        write_atomic(self.history_path(record.iteration), dump_json(record.to_json()))
        with open(self.paths.decisions_jsonl, "a", encoding="utf-8") as f:
            for d in record.decisions:
                f.write(json.dumps(d, sort_keys=True) + "\n")

    def read_decisions(self) -> list[dict[str, Any]]:
        if not self.paths.decisions_jsonl.exists():
            return []
        with open(self.paths.decisions_jsonl, "r", encoding="utf-8") as f:
            return [json.loads(line) for line in f if line.strip()]
