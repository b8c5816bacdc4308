from .base import Executor, NodeOutput, RunResult
from .process import ProcessExecutor
from .registry import available_executors, load_executor
from .simulated import SimulatedExecutor
