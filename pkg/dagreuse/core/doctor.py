from __future__ import annotations

import importlib.util
from dataclasses import dataclass

from dagreuse.config.schema import Settings
from dagreuse.core.errors import DagReuseError
from dagreuse.engine.catalog import MaterializationCatalog
from dagreuse.engine.executors.registry import available_executors
from dagreuse.engine.store import RunStore
from dagreuse.optimizer.materialization import MatPolicy


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: str


def _has_module(name: str) -> bool:
    return importlib.util.find_spec(name) is not None


def run_doctor(settings: Settings) -> list[Check]:
    checks: list[Check] = []
    checks.append(Check("policy", settings.policy in {p.value for p in MatPolicy}, f"policy={settings.policy}"))
    checks.append(Check("executor", settings.executor in available_executors(), f"executor={settings.executor}"))
    checks.append(Check("numpy", _has_module("numpy"), "required"))
    checks.append(Check("pydantic", _has_module("pydantic"), "required for workflow and catalog schemas"))
    checks.append(Check("pytest", _has_module("pytest"), "optional, for the test suite"))
    checks.append(Check("hypothesis", _has_module("hypothesis"), "optional, for property tests"))

    paths = settings.paths
    checks.append(Check("store_dir", paths.store_dir.exists(), str(paths.store_dir)))
    try:
        catalog = MaterializationCatalog.read(paths.store_dir, hash_algorithm=settings.hash_algorithm)
    except DagReuseError as exc:
        checks.append(Check("catalog", False, str(exc)))
        return checks
    problems = catalog.verify()
    checks.append(Check("catalog", not problems, f"{len(catalog)} entries, {catalog.used_bytes} bytes" if not problems else "; ".join(problems)))
    orphans = catalog.orphans()
    checks.append(Check("orphans", not orphans, f"{len(orphans)} unreferenced artifact(s)"))
    checks.append(
        Check("budget", catalog.used_bytes <= settings.budget_bytes, f"{catalog.used_bytes} of {settings.budget_bytes} bytes used")
    )
    try:
        records = RunStore(paths).load_history()
        checks.append(Check("history", True, f"{len(records)} iteration(s)"))
    except DagReuseError as exc:
        checks.append(Check("history", False, str(exc)))
    return checks
