from __future__ import annotations

from dagreuse.config.loader import load_settings
from dagreuse.core import orchestration
from dagreuse.core.contracts import VerifySummary
from dagreuse.core.doctor import run_doctor
from dagreuse.engine.session import Scenario
from dagreuse.reporting.comparison import format_comparison_table
from dagreuse.reporting.report import format_table, format_tally
from dagreuse.workflow.dag import NodeState


def _settings(args, *, ensure_dirs: bool = True):
    return load_settings(store_dir=getattr(args, "store", None), ensure_dirs=ensure_dirs)


def cmd_plan(args):
    settings = _settings(args, ensure_dirs=False)
    summary = orchestration.plan(settings, args.workflow, emit_psp_to=args.emit_psp)
    plan, metrics = summary.plan, summary.metrics
    print(f"workflow: {args.workflow} ({len(summary.dag)} nodes, {len(summary.sliced)} live)")
    original = sorted(summary.changeset.original)
    print(f"original: {', '.join(original) if original else 'none'}")
    print(f"{'node':<20} {'kind':<7} {'state':<8} {'c_ms':>10} {'l_ms':>10}")
    for n in summary.dag.node_ids:
        kind = summary.dag.nodes[n].kind.value
        if n not in plan.states:
            print(f"{n:<20} {kind:<7} {'Prune':<8} {'-':>10} {'-':>10}  (sliced)")
            continue
        m = metrics[n]
        print(f"{n:<20} {kind:<7} {plan.states[n].value:<8} {m.compute_ms:>10} {str(m.load_ms):>10}")
    print(f"predicted T*: {plan.cost_ms} ms")
    print("psp: " + " ".join(f"{k}={v}" for k, v in sorted(plan.summary.items())))
    if summary.psp_path is not None:
        print(f"psp written to {summary.psp_path}")


def cmd_run(args):
    settings = _settings(args)
    record = orchestration.run(settings, args.workflow, policy=args.policy, budget=args.budget, executor=args.executor)
    original = record.changeset["original"]
    print(f"iteration {record.iteration}: {len(original)} original node(s)")
    for state in (NodeState.COMPUTE, NodeState.LOAD, NodeState.PRUNE):
        nodes = sorted(n for n, s in record.states.items() if s == state.value)
        print(f"  {state.value:<8} {', '.join(nodes) if nodes else '-'}")
    for d in record.decisions:
        print(f"  {d['decision']:<11} {d['node']} (C={d['C_ms']} ms, l={d['l_ms']} ms, {d['reason']})")
    print(f"run {record.run_ms} ms + materialize {record.mat_time_ms} ms; cumulative {record.cumulative_run_ms} ms")
    print(f"storage: {record.storage_bytes} / {record.budget_bytes} bytes")


def cmd_simulate(args):
    settings = _settings(args)
    scenario = Scenario(iterations=args.iters, weights=Scenario.parse_weights(args.weights), seed=args.seed)
    out_dir = args.out or settings.paths.reports_dir
    summary = orchestration.simulate(
        settings,
        args.workflow,
        scenario,
        out_dir,
        policy=args.policy,
        budget=args.budget,
        executor=args.executor,
    )
    last = summary.records[-1]
    print(f"{len(summary.records)} iterations, final cumulative {last.cumulative_run_ms} ms, storage {last.storage_bytes} bytes")
    if any(r.am_capped for r in summary.records):
        print("note: always-materialize was capped by the storage budget")
    print(f"Wrote {summary.report_csv}")
    print(f"Wrote {summary.report_json}")


def cmd_experiment_compare(args):
    settings = _settings(args, ensure_dirs=False)
    scenario = Scenario(iterations=args.iters, weights=Scenario.parse_weights(args.weights), seed=args.seed)
    out_dir = args.out or settings.paths.reports_dir
    summary = orchestration.compare(
        settings,
        args.workflow,
        scenario,
        out_dir,
        runs=args.runs,
        budget=args.budget,
        executor=args.executor,
    )
    print(format_comparison_table(summary.rows))
    if any(r.am_capped for r in summary.rows):
        print("note: always-materialize was capped by the storage budget")
    print(f"Wrote {summary.report_csv}")
    print(f"Wrote {summary.report_json}")


def cmd_diff(args):
    changeset = orchestration.diff_files(args.prev, args.next)
    if changeset.is_empty:
        print("no changes")
        return
    for n in sorted(changeset.original):
        cause = "self-modified" if n in changeset.self_modified else "ancestor changed"
        print(f"original  {n}  ({cause})")
    for n in sorted(changeset.removed):
        print(f"removed   {n}")


def _print_verify(summary: VerifySummary) -> int:
    for case in summary.cases:
        mark = "agree" if case.agree else "MISMATCH"
        print(f"[{mark}] {case.label}: solver={case.solver_cost} oracle={case.oracle_cost} violations={case.violations}")
    if summary.ok:
        print("agree")
        return 0
    print(f"{len(summary.mismatches)} mismatch(es)")
    return 1


def cmd_verify(args):
    settings = _settings(args, ensure_dirs=False)
    if args.workflow is None and args.random <= 0:
        print("nothing to verify: pass a workflow or --random N")
        return 2
    cases = []
    if args.workflow is not None:
        cases += orchestration.verify_workflow(settings, args.workflow).cases
    if args.random > 0:
        cases += orchestration.verify_random(settings, args.random, seed=args.seed).cases
    return _print_verify(VerifySummary(cases=cases))


def cmd_report(args):
    settings = _settings(args)
    summary = orchestration.report(settings, args.out)
    if not summary.rows:
        print(f"no iterations recorded in {settings.paths.store_dir}")
        return
    print(format_table(summary.rows))
    print(format_tally(summary.decisions))
    if summary.written is not None:
        for path in summary.written:
            print(f"Wrote {path}")


def cmd_doctor(args):
    settings = _settings(args, ensure_dirs=False)
    checks = run_doctor(settings)
    ok_count = 0
    for chk in checks:
        mark = "OK" if chk.ok else "FAIL"
        print(f"[{mark}] {chk.name}: {chk.detail}")
        ok_count += int(chk.ok)
    print(f"\n{ok_count}/{len(checks)} checks passing")
