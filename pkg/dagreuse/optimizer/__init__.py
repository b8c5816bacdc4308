from .flow import UNBOUNDED, FlowNetwork, MaxFlowResult, Unbounded, max_flow
from .materialization import (
    BudgetLedger,
    Decision,
    DecisionRecord,
    LedgerEntry,
    MatDecision,
    MatPolicy,
    StreamingMaterializer,
    cumulative_runtime,
    ledger_from_entries,
    materialization_runtime,
    next_iteration_metrics,
    on_out_of_scope,
    purge_stale,
)
from .psp import (
    ProjectId,
    PspInstance,
    build_network,
    compute_project,
    emit_psp,
    load_project,
    optimal_plan,
    plan_from_projects,
    reduce_to_psp,
    solve_psp,
)
