from __future__ import annotations

import logging
import os
import shlex
import subprocess
import time
from pathlib import Path
from typing import Mapping

from dagreuse.core.errors import ExecutorError
from dagreuse.workflow.dag import NodeId, OperatorDecl, ceil_div

from .base import NodeOutput, RunResult

logger = logging.getLogger(__name__)

OUTPUT_ENV = "DAGREUSE_OUTPUT"
INPUTS_ENV = "DAGREUSE_INPUTS"
NODE_ENV = "DAGREUSE_NODE"


class ProcessExecutor:
    """Runs the node's `command` (no shell) and measures wall time and output file size.

    The command receives the output path in DAGREUSE_OUTPUT and its input files,
    in declared order, in DAGREUSE_INPUTS.
    """

    name = "process"
    deterministic = False

    def __init__(self, timeout_s: float | None = None):
        self.timeout_s = timeout_s

    def run(self, node: OperatorDecl, inputs: Mapping[NodeId, NodeOutput], workdir: Path) -> RunResult:
        if not node.command:
            raise ExecutorError(node.id, "no command configured")
        workdir = Path(workdir)
        workdir.mkdir(parents=True, exist_ok=True)
        out_path = workdir / f"{node.id}.out"
        out_path.unlink(missing_ok=True)

        input_paths = []
        for p in dict.fromkeys(node.inputs):
            upstream = inputs.get(p)
            if upstream is None or upstream.path is None:
                raise ExecutorError(node.id, f"input {p} has no file")
            input_paths.append(str(upstream.path))

        env = dict(os.environ)
        env[OUTPUT_ENV] = str(out_path)
        env[INPUTS_ENV] = os.pathsep.join(input_paths)
        env[NODE_ENV] = node.id

        argv = shlex.split(node.command)
        logger.debug("running %s: %s", node.id, argv)
        started = time.perf_counter()
        try:
            proc = subprocess.run(argv, cwd=workdir, env=env, capture_output=True, text=True, timeout=self.timeout_s)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise ExecutorError(node.id, f"command failed to run: {exc}") from exc
        elapsed_ms = ceil_div(int((time.perf_counter() - started) * 1_000_000), 1000)

        if proc.returncode != 0:
            tail = (proc.stderr or "").strip().splitlines()[-1:] or [""]
            raise ExecutorError(node.id, f"exit status {proc.returncode}: {tail[0]}")
        if not out_path.exists():
            raise ExecutorError(node.id, f"command produced no output at {out_path}")
        return RunResult(
            output=NodeOutput(node_id=node.id, size_bytes=out_path.stat().st_size, path=out_path),
            elapsed_ms=elapsed_ms,
        )
