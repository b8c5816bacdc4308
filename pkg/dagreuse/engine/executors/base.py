from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol

from dagreuse.workflow.dag import NodeId, OperatorDecl


@dataclass(frozen=True)
class NodeOutput:
    """An operator's result: its size, and the file holding it when one exists."""

    node_id: NodeId
    size_bytes: int
    path: Path | None = None


@dataclass(frozen=True)
class RunResult:
    output: NodeOutput
    elapsed_ms: int


class Executor(Protocol):
    name: str
    deterministic: bool

    def run(self, node: OperatorDecl, inputs: Mapping[NodeId, NodeOutput], workdir: Path) -> RunResult: ...
