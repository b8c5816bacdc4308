from __future__ import annotations

"""Side-by-side rows for the opt/am/nm policy comparison and their CSV/JSON renderings.

Values are exact means over repeated runs. Cumulative time accumulates the mean
per-iteration time, so it is the running sum of the `*_iteration_ms` columns.
"""

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from dagreuse.core.results import SCHEMA_VERSION, dump_json, write_atomic
from dagreuse.optimizer.materialization import MatPolicy

from .report import format_fraction

COMPARISON_VERSION_LINE = "# dagreuse comparison v1"
POLICIES = tuple(p.value for p in MatPolicy)
_MEASURES = ("iteration_ms", "cumulative_ms", "storage_bytes")
COMPARISON_COLUMNS = (
    "t",
    "iteration_type",
    "modified_node",
    *(f"{p}_{m}" for m in _MEASURES for p in POLICIES),
    "cumulative_opt_over_am",
    "cumulative_opt_over_nm",
    "storage_opt_over_am",
    "am_capped",
)


def ratio(numerator: Fraction, denominator: Fraction) -> Fraction | None:
    return None if denominator == 0 else Fraction(numerator) / Fraction(denominator)


def format_ratio(value: Fraction | None) -> str:
    return "-" if value is None else format_fraction(value)


@dataclass(frozen=True)
class ComparisonRow:
    t: int
    iteration_type: str
    modified_node: str | None
    iteration_ms: Mapping[str, Fraction]
    cumulative_ms: Mapping[str, Fraction]
    storage_bytes: Mapping[str, Fraction]
    am_capped: bool = False

    @property
    def cumulative_opt_over_am(self) -> Fraction | None:
        return ratio(self.cumulative_ms["opt"], self.cumulative_ms["am"])

    @property
    def cumulative_opt_over_nm(self) -> Fraction | None:
        return ratio(self.cumulative_ms["opt"], self.cumulative_ms["nm"])

    @property
    def storage_opt_over_am(self) -> Fraction | None:
        return ratio(self.storage_bytes["opt"], self.storage_bytes["am"])

    def as_cells(self) -> dict[str, object]:
        cells: dict[str, object] = {
            "t": self.t,
            "iteration_type": self.iteration_type,
            "modified_node": self.modified_node or "-",
        }
        for measure in _MEASURES:
            values = getattr(self, measure)
            for p in POLICIES:
                cells[f"{p}_{measure}"] = format_fraction(values[p])
        cells["cumulative_opt_over_am"] = format_ratio(self.cumulative_opt_over_am)
        cells["cumulative_opt_over_nm"] = format_ratio(self.cumulative_opt_over_nm)
        cells["storage_opt_over_am"] = format_ratio(self.storage_opt_over_am)
        cells["am_capped"] = int(self.am_capped)
        return cells


def render_comparison_csv(rows: Sequence[ComparisonRow]) -> str:
    buf = io.StringIO()
    buf.write(COMPARISON_VERSION_LINE + "\n")
    writer = csv.DictWriter(buf, fieldnames=COMPARISON_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.as_cells())
    return buf.getvalue()


def render_comparison_json(rows: Sequence[ComparisonRow], *, runs: int, seed: int) -> str:
    return dump_json(
        {
            "schema_version": SCHEMA_VERSION,
            "policies": list(POLICIES),
            "runs": runs,
            "seed": seed,
            "columns": list(COMPARISON_COLUMNS),
            "rows": [r.as_cells() for r in rows],
        }
    )


def write_comparison(rows: Sequence[ComparisonRow], out_dir: str | Path, *, runs: int, seed: int) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    csv_path = write_atomic(out_dir / "comparison.csv", render_comparison_csv(rows))
    json_path = write_atomic(out_dir / "comparison.json", render_comparison_json(rows, runs=runs, seed=seed))
    return csv_path, json_path


def _ms(value: Fraction) -> str:
    return f"{float(value):.1f}"


def format_comparison_table(rows: Sequence[ComparisonRow]) -> str:
    header = f"{'t':>3}  {'type':<8} {'opt_cum_ms':>12} {'am_cum_ms':>12} {'nm_cum_ms':>12} {'opt/am storage':>15}"
    lines = [header, "-" * len(header)]
    for r in rows:
        share = r.storage_opt_over_am
        storage = "-" if share is None else f"{float(share):.3f}"
        flag = "  capped" if r.am_capped else ""
        lines.append(
            f"{r.t:>3}  {r.iteration_type:<8} {_ms(r.cumulative_ms['opt']):>12} {_ms(r.cumulative_ms['am']):>12}"
            f" {_ms(r.cumulative_ms['nm']):>12} {storage:>15}{flag}"
        )
    return "\n".join(lines)
