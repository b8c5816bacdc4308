from .codec import load_workflow, parse_workflow, save_workflow, workflow_from_dict, workflow_to_dict
from .dag import (
    INFINITE,
    ExecutionPlan,
    Infinite,
    NodeKind,
    NodeState,
    OperatorDecl,
    OperatorMetrics,
    ValidationReport,
    Violation,
    WorkflowDag,
    check_plan,
    load_ms_for_size,
    plan_cost,
    require_valid,
    slice_to_outputs,
    topological_order,
    validate,
)

__all__ = [
    "INFINITE",
    "ExecutionPlan",
    "Infinite",
    "NodeKind",
    "NodeState",
    "OperatorDecl",
    "OperatorMetrics",
    "ValidationReport",
    "Violation",
    "WorkflowDag",
    "check_plan",
    "load_ms_for_size",
    "load_workflow",
    "parse_workflow",
    "plan_cost",
    "require_valid",
    "save_workflow",
    "slice_to_outputs",
    "topological_order",
    "validate",
    "workflow_from_dict",
    "workflow_to_dict",
]
