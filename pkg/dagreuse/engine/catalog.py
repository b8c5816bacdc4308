from __future__ import annotations

"""Content-addressed store of materialized node outputs.

Layout under the store root: `catalog.json` (index) and `objects/<signature>`.
The index is rewritten atomically and only after the artifact it names is fsynced.
"""

import logging
import os
import shutil
import tempfile
import threading
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from dagreuse.core.errors import CatalogIntegrityError
from dagreuse.core.results import SCHEMA_VERSION, dump_json, write_atomic
from dagreuse.workflow.dag import NodeId, ceil_div, load_ms_for_size

from .executors.base import NodeOutput

logger = logging.getLogger(__name__)

INDEX_NAME = "catalog.json"
OBJECTS_DIR = "objects"


class CatalogEntryModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    signature: str = Field(min_length=1)
    node_id: str
    artifact: str
    size_bytes: int = Field(ge=0)
    load_ms: int = Field(ge=0)
    created_iteration: int = Field(ge=0)


class CatalogIndexModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: int
    hash_algorithm: str
    entries: list[CatalogEntryModel]


@dataclass(frozen=True)
class CatalogEntry:
    signature: str
    node_id: NodeId
    artifact: str
    size_bytes: int
    load_ms: int
    created_iteration: int


class MaterializationCatalog:
    def __init__(self, root: str | Path, *, hash_algorithm: str = "sha256", disk_read_bytes_per_ms: int = 100_000):
        self.root = Path(root)
        self.hash_algorithm = hash_algorithm
        self.disk_read_bytes_per_ms = disk_read_bytes_per_ms
        self._index: dict[str, CatalogEntry] = {}
        self._lock = threading.Lock()

    @classmethod
    def open(cls, root: str | Path, *, hash_algorithm: str = "sha256", disk_read_bytes_per_ms: int = 100_000) -> "MaterializationCatalog":
        catalog = cls(root, hash_algorithm=hash_algorithm, disk_read_bytes_per_ms=disk_read_bytes_per_ms)
        catalog.objects_dir.mkdir(parents=True, exist_ok=True)
        catalog._read_index()
        catalog._reconcile()
        return catalog

    @classmethod
    def read(cls, root: str | Path, *, hash_algorithm: str = "sha256") -> "MaterializationCatalog":
        """Index only; nothing on disk is repaired or collected."""
        catalog = cls(root, hash_algorithm=hash_algorithm)
        catalog._read_index()
        return catalog

    @property
    def index_path(self) -> Path:
        return self.root / INDEX_NAME

    @property
    def objects_dir(self) -> Path:
        return self.root / OBJECTS_DIR

    def artifact_path(self, entry: CatalogEntry) -> Path:
        return self.root / entry.artifact

    # ── index I/O ──

    def _read_index(self) -> None:
        if not self.index_path.exists():
            return
        try:
            model = CatalogIndexModel.model_validate_json(self.index_path.read_text(encoding="utf-8"))
        except (OSError, ValidationError) as exc:
            raise CatalogIntegrityError(f"unreadable catalog index {self.index_path}: {exc}") from exc
        if model.hash_algorithm != self.hash_algorithm:
            raise CatalogIntegrityError(
                f"catalog at {self.root} uses {model.hash_algorithm!r} signatures, expected {self.hash_algorithm!r}"
            )
        self._index = {e.signature: CatalogEntry(**e.model_dump()) for e in model.entries}

    def _flush(self) -> None:
        model = CatalogIndexModel(
            schema_version=SCHEMA_VERSION,
            hash_algorithm=self.hash_algorithm,
            entries=[CatalogEntryModel(**asdict(e)) for e in self.entries],
        )
        write_atomic(self.index_path, dump_json(model.model_dump()))

    def _reconcile(self) -> None:
        """Drop index entries without artifacts, reject size mismatches, collect orphans."""
        dropped = []
        for sig, entry in list(self._index.items()):
            path = self.artifact_path(entry)
            if not path.exists():
                logger.warning("artifact for %s (%s) is missing; dropping catalog entry", entry.node_id, sig[:12])
                dropped.append(sig)
                continue
            actual = path.stat().st_size
            if actual != entry.size_bytes:
                raise CatalogIntegrityError(f"artifact {path} has {actual} bytes, index says {entry.size_bytes}")
        for sig in dropped:
            del self._index[sig]
        if dropped:
            self._flush()

        for path in self.orphans():
            logger.info("removing orphan artifact %s", path.name)
            try:
                path.unlink()
            except OSError as exc:
                logger.warning("could not remove orphan artifact %s: %s", path, exc)

    def orphans(self) -> list[Path]:
        """Files under objects/ that no index entry names (including interrupted writes)."""
        if not self.objects_dir.exists():
            return []
        referenced = {self.artifact_path(e).name for e in self._index.values()}
        return [p for p in sorted(self.objects_dir.iterdir()) if p.name not in referenced]

    # ── queries ──

    @property
    def entries(self) -> list[CatalogEntry]:
        return sorted(self._index.values(), key=lambda e: (e.node_id, e.signature))

    @property
    def used_bytes(self) -> int:
        return sum(e.size_bytes for e in self._index.values())

    def __contains__(self, signature: object) -> bool:
        return signature in self._index

    def __len__(self) -> int:
        return len(self._index)

    def get(self, signature: str) -> CatalogEntry | None:
        return self._index.get(signature)

    def available(self, signature: str) -> CatalogEntry | None:
        entry = self._index.get(signature)
        if entry is None:
            return None
        if not self.artifact_path(entry).exists():
            logger.warning("catalog entry %s for %s has no artifact; treating as absent", signature[:12], entry.node_id)
            return None
        return entry

    def verify(self) -> list[str]:
        problems = []
        for e in self.entries:
            path = self.artifact_path(e)
            if not path.exists():
                problems.append(f"missing artifact for {e.node_id} ({e.signature[:12]})")
            elif path.stat().st_size != e.size_bytes:
                problems.append(f"size mismatch for {e.node_id}: {path.stat().st_size} != {e.size_bytes}")
        return problems

    # ── mutation ──

    def put(self, signature: str, node_id: NodeId, output: NodeOutput, *, iteration: int) -> tuple[CatalogEntry, int]:
        """Persist `output` under `signature`; returns the entry and the write time in ms."""
        with self._lock:
            existing = self._index.get(signature)
            if existing is not None:
                return existing, 0
            target = self.objects_dir / signature
            fd, tmp = tempfile.mkstemp(prefix=f".{signature[:12]}.", dir=self.objects_dir)
            try:
                if output.path is None:
                    with os.fdopen(fd, "wb") as f:
                        f.truncate(output.size_bytes)
                        f.flush()
                        os.fsync(f.fileno())
                    write_ms = load_ms_for_size(output.size_bytes, self.disk_read_bytes_per_ms)
                else:
                    started = time.perf_counter()
                    with os.fdopen(fd, "wb") as f, open(output.path, "rb") as src:
                        shutil.copyfileobj(src, f)
                        f.flush()
                        os.fsync(f.fileno())
                    write_ms = ceil_div(int((time.perf_counter() - started) * 1_000_000), 1000)
                os.replace(tmp, target)
            except BaseException:
                Path(tmp).unlink(missing_ok=True)
                raise
            entry = CatalogEntry(
                signature=signature,
                node_id=node_id,
                artifact=f"{OBJECTS_DIR}/{signature}",
                size_bytes=target.stat().st_size,
                load_ms=write_ms,
                created_iteration=iteration,
            )
            self._index[signature] = entry
            self._flush()
            return entry, write_ms

    def remove(self, signature: str) -> bool:
        with self._lock:
            entry = self._index.pop(signature, None)
            if entry is None:
                return False
            self._flush()
        try:
            self.artifact_path(entry).unlink(missing_ok=True)
        except OSError as exc:
            logger.warning("could not delete artifact for %s: %s", entry.node_id, exc)
        return True


def load_node(catalog: MaterializationCatalog, signature: str, *, copy_to: Path | None = None) -> tuple[NodeOutput, int]:
    """Read a materialized output back.

    Without `copy_to` the recorded load time is returned; with it the artifact is
    copied there and the copy is timed.
    """
    entry = catalog.get(signature)
    if entry is None:
        raise CatalogIntegrityError(f"no catalog entry for signature {signature[:12]}")
    path = catalog.artifact_path(entry)
    if not path.exists():
        raise CatalogIntegrityError(f"artifact for {entry.node_id} is missing: {path}")
    actual = path.stat().st_size
    if actual != entry.size_bytes:
        raise CatalogIntegrityError(f"artifact {path} has {actual} bytes, index says {entry.size_bytes}")
    if copy_to is None:
        return NodeOutput(node_id=entry.node_id, size_bytes=entry.size_bytes, path=path), entry.load_ms
    copy_to = Path(copy_to)
    copy_to.parent.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    shutil.copyfile(path, copy_to)
    elapsed_ms = ceil_div(int((time.perf_counter() - started) * 1_000_000), 1000)
    return NodeOutput(node_id=entry.node_id, size_bytes=entry.size_bytes, path=copy_to), elapsed_ms
