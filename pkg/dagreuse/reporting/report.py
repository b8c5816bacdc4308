from __future__ import annotations

"""Per-iteration report rows and their CSV/JSON renderings."""

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from dagreuse.core.results import SCHEMA_VERSION, dump_json, write_atomic
from dagreuse.engine.store import IterationRecord
from dagreuse.workflow.dag import NodeState

CSV_VERSION_LINE = "# dagreuse report v1"
CSV_COLUMNS = (
    "t",
    "iteration_type",
    "plan_cost_ms",
    "mat_time_ms",
    "cumulative_ms",
    "storage_bytes",
    "n_prune",
    "n_load",
    "n_compute",
    "frac_prune",
    "frac_load",
    "frac_compute",
)


def format_fraction(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class ReportRow:
    t: int
    iteration_type: str
    plan_cost_ms: int
    mat_time_ms: int
    cumulative_ms: int
    storage_bytes: int
    n_prune: int
    n_load: int
    n_compute: int

    @property
    def n_nodes(self) -> int:
        return self.n_prune + self.n_load + self.n_compute

    def _frac(self, count: int) -> Fraction:
        return Fraction(count, self.n_nodes) if self.n_nodes else Fraction(0)

    @property
    def frac_prune(self) -> Fraction:
        return self._frac(self.n_prune)

    @property
    def frac_load(self) -> Fraction:
        return self._frac(self.n_load)

    @property
    def frac_compute(self) -> Fraction:
        return self._frac(self.n_compute)

    def as_cells(self) -> dict[str, object]:
        return {
            "t": self.t,
            "iteration_type": self.iteration_type,
            "plan_cost_ms": self.plan_cost_ms,
            "mat_time_ms": self.mat_time_ms,
            "cumulative_ms": self.cumulative_ms,
            "storage_bytes": self.storage_bytes,
            "n_prune": self.n_prune,
            "n_load": self.n_load,
            "n_compute": self.n_compute,
            "frac_prune": format_fraction(self.frac_prune),
            "frac_load": format_fraction(self.frac_load),
            "frac_compute": format_fraction(self.frac_compute),
        }


def row_from_record(record: IterationRecord) -> ReportRow:
    states = list(record.states.values())
    return ReportRow(
        t=record.iteration,
        iteration_type=record.iteration_type,
        plan_cost_ms=record.predicted_cost_ms,
        mat_time_ms=record.mat_time_ms,
        cumulative_ms=record.cumulative_run_ms,
        storage_bytes=record.storage_bytes,
        n_prune=states.count(NodeState.PRUNE.value),
        n_load=states.count(NodeState.LOAD.value),
        n_compute=states.count(NodeState.COMPUTE.value),
    )


def build_report(records: Iterable[IterationRecord]) -> list[ReportRow]:
    return [row_from_record(r) for r in sorted(records, key=lambda r: r.iteration)]


def render_csv(rows: Sequence[ReportRow]) -> str:
    buf = io.StringIO()
    buf.write(CSV_VERSION_LINE + "\n")
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.as_cells())
    return buf.getvalue()


def render_json(rows: Sequence[ReportRow]) -> str:
    return dump_json({"schema_version": SCHEMA_VERSION, "columns": list(CSV_COLUMNS), "rows": [r.as_cells() for r in rows]})


def write_report(rows: Sequence[ReportRow], out_dir: str | Path) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    csv_path = write_atomic(out_dir / "report.csv", render_csv(rows))
    json_path = write_atomic(out_dir / "report.json", render_json(rows))
    return csv_path, json_path


def format_table(rows: Sequence[ReportRow]) -> str:
    header = f"{'t':>3}  {'type':<8} {'plan_ms':>10} {'mat_ms':>8} {'cumulative_ms':>14} {'storage':>12}  P/L/C"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r.t:>3}  {r.iteration_type:<8} {r.plan_cost_ms:>10} {r.mat_time_ms:>8} {r.cumulative_ms:>14} {r.storage_bytes:>12}"
            f"  {r.n_prune}/{r.n_load}/{r.n_compute}"
        )
    return "\n".join(lines)


@dataclass(frozen=True)
class DecisionTally:
    """Counts over the streaming decision log."""

    materialized: int = 0
    discarded: int = 0
    write_ms: int = 0
    reasons: Mapping[str, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return self.materialized + self.discarded


def tally_decisions(decisions: Iterable[Mapping[str, Any]]) -> DecisionTally:
    decisions = list(decisions)
    made = Counter(d["decision"] for d in decisions if "decision" in d)
    reasons: Counter[str] = Counter()
    write_ms = 0
    for d in decisions:
        if d.get("decision") == "Discard":
            reasons[str(d.get("reason", "?"))] += 1
        else:
            write_ms += int(d.get("write_ms") or 0)
    return DecisionTally(
        materialized=made["Materialize"],
        discarded=made["Discard"],
        write_ms=write_ms,
        reasons=dict(sorted(reasons.items())),
    )


def format_tally(tally: DecisionTally) -> str:
    line = f"decisions: {tally.materialized} materialized, {tally.discarded} discarded"
    if tally.reasons:
        line += " (" + ", ".join(f"{k}={v}" for k, v in tally.reasons.items()) + ")"
    return line + f"; write {tally.write_ms} ms"
