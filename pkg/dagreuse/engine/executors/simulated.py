from __future__ import annotations

from pathlib import Path
from typing import Mapping

from dagreuse.workflow.dag import NodeId, OperatorDecl

from .base import NodeOutput, RunResult


class SimulatedExecutor:
    """Reports the declared compute time and a synthetic output of the declared size."""

    name = "sim"
    deterministic = True

    def run(self, node: OperatorDecl, inputs: Mapping[NodeId, NodeOutput], workdir: Path) -> RunResult:
        return RunResult(output=NodeOutput(node_id=node.id, size_bytes=node.size_bytes), elapsed_ms=node.compute_ms)
