"""dagreuse package entrypoint."""

from .config.loader import load_settings

__all__ = ["load_settings"]
