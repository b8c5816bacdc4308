from __future__ import annotations

"""JSON workflow files: strict schema in, stable-key JSON out."""

from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from dagreuse.core.errors import WorkflowFormatError
from dagreuse.core.results import dump_json, write_atomic

from .dag import NodeKind, OperatorDecl, WorkflowDag

DEFAULT_DISK_READ_BYTES_PER_MS = 100_000


class NodeModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str = Field(min_length=1)
    kind: NodeKind
    code: str
    inputs: list[str]
    is_output: bool
    compute_ms: int = Field(ge=0)
    size_bytes: int = Field(ge=0)
    command: str | None = None


class WorkflowModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    iteration: int = Field(ge=0)
    disk_read_bytes_per_ms: int | None = Field(default=None, gt=0)
    nodes: list[NodeModel]

    @model_validator(mode="after")
    def _unique_ids(self) -> "WorkflowModel":
        seen: set[str] = set()
        for node in self.nodes:
            if node.id in seen:
                raise ValueError(f"duplicate node id {node.id!r}")
            seen.add(node.id)
        return self


def _to_dag(model: WorkflowModel, default_speed: int) -> WorkflowDag:
    decls = [
        OperatorDecl(
            id=n.id,
            kind=n.kind,
            code=n.code,
            inputs=tuple(n.inputs),
            is_output=n.is_output,
            compute_ms=n.compute_ms,
            size_bytes=n.size_bytes,
            command=n.command,
        )
        for n in model.nodes
    ]
    return WorkflowDag.from_decls(decls, iteration=model.iteration, disk_read_bytes_per_ms=model.disk_read_bytes_per_ms or default_speed)


def parse_workflow(text: str, *, disk_read_bytes_per_ms: int = DEFAULT_DISK_READ_BYTES_PER_MS) -> WorkflowDag:
    """Files that omit `disk_read_bytes_per_ms` read at the given default speed."""
    try:
        return _to_dag(WorkflowModel.model_validate_json(text), disk_read_bytes_per_ms)
    except ValidationError as exc:
        raise WorkflowFormatError(str(exc)) from exc


def workflow_from_dict(data: dict[str, Any], *, disk_read_bytes_per_ms: int = DEFAULT_DISK_READ_BYTES_PER_MS) -> WorkflowDag:
    try:
        return _to_dag(WorkflowModel.model_validate(data), disk_read_bytes_per_ms)
    except ValidationError as exc:
        raise WorkflowFormatError(str(exc)) from exc


def load_workflow(path: str | Path, *, disk_read_bytes_per_ms: int = DEFAULT_DISK_READ_BYTES_PER_MS) -> WorkflowDag:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise WorkflowFormatError(f"cannot read workflow {path}: {exc}") from exc
    return parse_workflow(text, disk_read_bytes_per_ms=disk_read_bytes_per_ms)


def workflow_to_dict(dag: WorkflowDag) -> dict[str, Any]:
    nodes = []
    for n in dag.node_ids:
        d = dag.nodes[n]
        entry: dict[str, Any] = {
            "id": d.id,
            "kind": d.kind.value,
            "code": d.code,
            "inputs": list(d.inputs),
            "is_output": d.is_output,
            "compute_ms": d.compute_ms,
            "size_bytes": d.size_bytes,
        }
        if d.command is not None:
            entry["command"] = d.command
        nodes.append(entry)
    return {"iteration": dag.iteration, "disk_read_bytes_per_ms": dag.disk_read_bytes_per_ms, "nodes": nodes}


def save_workflow(dag: WorkflowDag, path: str | Path) -> Path:
    return write_atomic(Path(path), dump_json(workflow_to_dict(dag)))
