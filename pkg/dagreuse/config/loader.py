from __future__ import annotations

from pathlib import Path

from .defaults import from_root_config
from .schema import Settings


def load_settings(*, store_dir: str | Path | None = None, ensure_dirs: bool = True, **overrides) -> Settings:
    """Load runtime settings, defaulting to values from the root config module."""
    settings = from_root_config()
    if store_dir is not None:
        settings = settings.with_store(store_dir)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides:
        settings = settings.with_overrides(**overrides)
    if ensure_dirs:
        settings.paths.ensure_dirs()
    return settings
