from .signatures import ChangeSet, Signature, compute_signatures, diff, resolve_load_times, signature

__all__ = ["ChangeSet", "Signature", "compute_signatures", "diff", "resolve_load_times", "signature"]
