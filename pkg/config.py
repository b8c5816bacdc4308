"""Shared configuration for the dagreuse optimizer."""
from pathlib import Path

# Directories
PROJECT_DIR = Path(__file__).parent
STORE_DIR = PROJECT_DIR / "store"
REPORTS_DIR = PROJECT_DIR / "reports"

# ── Cost model ──
# 100 MB/s; workflow files may override per workflow.
DISK_READ_BYTES_PER_MS = 100_000

# ── Materialization ──
BUDGET_BYTES = 10 * 2**30  # 10 GiB
POLICY = "opt"  # "opt", "am" or "nm"

# ── Execution ──
EXECUTOR = "sim"  # "sim" or "process"
WORKERS = 4

# ── Sessions ──
REDRAW_LIMIT = 16

# ── Oracles ──
OEP_ENUM_MAX_NODES = 16
KNAPSACK_ENUM_MAX_ITEMS = 20

# Recorded in the catalog header; catalogs written with another digest are rejected.
HASH_ALGORITHM = "sha256"
