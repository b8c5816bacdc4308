from __future__ import annotations

from dagreuse.core.errors import ConfigError

from .base import Executor
from .process import ProcessExecutor
from .simulated import SimulatedExecutor

_EXECUTORS = {
    "sim": SimulatedExecutor,
    "process": ProcessExecutor,
}


def load_executor(name: str) -> Executor:
    try:
        return _EXECUTORS[name]()
    except KeyError as exc:
        raise ConfigError(f"Unknown executor: {name!r}. Expected one of {sorted(_EXECUTORS)}") from exc


def available_executors() -> list[str]:
    return sorted(_EXECUTORS)
