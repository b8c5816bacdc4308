from __future__ import annotations

from pathlib import Path

FIXTURES_DIR = Path(__file__).resolve().parent
BUNDLED = ("census", "nlp", "mnist", "genomics")


def fixture_path(name: str) -> Path:
    path = FIXTURES_DIR / f"{name}.json"
    if not path.exists():
        raise FileNotFoundError(f"no bundled workflow named {name!r}")
    return path
