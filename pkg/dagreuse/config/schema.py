from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Literal

PolicyName = Literal["opt", "am", "nm"]
ExecutorName = Literal["sim", "process"]


@dataclass(frozen=True)
class Paths:
    project_dir: Path
    store_dir: Path
    reports_dir: Path

    @property
    def catalog_json(self) -> Path:
        return self.store_dir / "catalog.json"

    @property
    def objects_dir(self) -> Path:
        return self.store_dir / "objects"

    @property
    def history_dir(self) -> Path:
        return self.store_dir / "history"

    @property
    def workflows_dir(self) -> Path:
        return self.store_dir / "workflows"

    @property
    def decisions_jsonl(self) -> Path:
        return self.store_dir / "decisions.jsonl"

    def with_store(self, store_dir: str | Path) -> "Paths":
        return replace(self, store_dir=Path(store_dir))

    def ensure_dirs(self) -> None:
        for p in (self.store_dir, self.objects_dir, self.history_dir, self.workflows_dir):
            p.mkdir(parents=True, exist_ok=True)


@dataclass(frozen=True)
class Settings:
    paths: Paths

    disk_read_bytes_per_ms: int
    budget_bytes: int
    policy: str
    executor: str
    workers: int

    redraw_limit: int
    oep_enum_max_nodes: int
    knapsack_enum_max_items: int
    hash_algorithm: str

    def with_overrides(self, **kwargs) -> "Settings":
        return replace(self, **kwargs)

    def with_store(self, store_dir: str | Path) -> "Settings":
        return replace(self, paths=self.paths.with_store(store_dir))
