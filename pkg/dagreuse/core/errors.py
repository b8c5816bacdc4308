from __future__ import annotations

"""Exception hierarchy shared by every dagreuse module."""

from typing import Any


class DagReuseError(Exception):
    """Base class for all domain errors."""


class ConfigError(DagReuseError, ValueError):
    """Raised for unknown executor or policy names and other bad settings."""


class WorkflowFormatError(DagReuseError, ValueError):
    """Raised when a workflow file cannot be parsed or violates the file schema."""


class WorkflowValidationError(DagReuseError, ValueError):
    """Raised when an operation needs a well-formed DAG and gets a broken one."""

    def __init__(self, report: Any):
        self.report = report
        super().__init__(f"invalid workflow: {report}")


class CycleError(DagReuseError, ValueError):
    def __init__(self, cycle: list[str]):
        self.cycle = list(cycle)
        super().__init__("cycle {" + ",".join(sorted(self.cycle)) + "}")


class PlanError(DagReuseError, ValueError):
    """Raised for malformed plans: unmaterialized loads, broken closures, unknown nodes."""


class CatalogIntegrityError(DagReuseError, RuntimeError):
    """Raised when the materialization catalog disagrees with the files on disk."""


class ExecutorError(DagReuseError, RuntimeError):
    def __init__(self, node_id: str, message: str):
        self.node_id = node_id
        super().__init__(f"node {node_id!r}: {message}")


class EnumerationBoundError(DagReuseError, ValueError):
    """Raised when a brute-force oracle is asked to enumerate past its bound."""


class ScenarioError(DagReuseError, ValueError):
    """Raised for degenerate session scenarios."""
