from __future__ import annotations

from pathlib import Path

import config as root_config

from .schema import Paths, Settings


def from_root_config() -> Settings:
    project_dir = Path(getattr(root_config, "PROJECT_DIR", Path(__file__).resolve().parents[2]))
    paths = Paths(
        project_dir=project_dir,
        store_dir=Path(root_config.STORE_DIR),
        reports_dir=Path(root_config.REPORTS_DIR),
    )
    return Settings(
        paths=paths,
        disk_read_bytes_per_ms=int(getattr(root_config, "DISK_READ_BYTES_PER_MS", 100_000)),
        budget_bytes=int(getattr(root_config, "BUDGET_BYTES", 10 * 2**30)),
        policy=str(getattr(root_config, "POLICY", "opt")),
        executor=str(getattr(root_config, "EXECUTOR", "sim")),
        workers=int(getattr(root_config, "WORKERS", 4)),
        redraw_limit=int(getattr(root_config, "REDRAW_LIMIT", 16)),
        oep_enum_max_nodes=int(getattr(root_config, "OEP_ENUM_MAX_NODES", 16)),
        knapsack_enum_max_items=int(getattr(root_config, "KNAPSACK_ENUM_MAX_ITEMS", 20)),
        hash_algorithm=str(getattr(root_config, "HASH_ALGORITHM", "sha256")),
    )
