"""
Model comparison report: one row per model, best score per column marked.

Rendered as aligned plain text (percentages, one decimal), CSV, and JSON.
The JSON form carries the full-precision metrics and rebuilds the same
comparison with :meth:`Comparison.from_dict`.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

from guestmix.core.evaluation import MetricsReport
from guestmix.errors import MetricsError

COMPARISON_SCHEMA_VERSION = 1

SCORE_COLUMNS: Tuple[Tuple[str, str], ...] = (
    ("precision", "Pr"),
    ("recall", "Re"),
    ("accuracy", "Acc"),
    ("f1_binary", "F1"),
    ("f1_macro", "F1-macro"),
    ("f1_weighted", "F1-w"),
)
BEST_MARK = "*"


@dataclass(frozen=True)
class ComparisonRow:
    name: str
    metrics: MetricsReport
    parameters: Optional[int] = None
    latency_ms: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "metrics": self.metrics.to_dict(),
            "parameters": self.parameters,
            "latency_ms": self.latency_ms,
        }


@dataclass
class Comparison:
    rows: List[ComparisonRow] = field(default_factory=list)

    def best(self) -> Dict[str, List[int]]:
        """Row indices holding the column maximum (ties share the mark)."""
        marks: Dict[str, List[int]] = {}
        for column, _ in SCORE_COLUMNS:
            values = [row.metrics.percentages()[column] for row in self.rows]
            top = max(values)
            marks[column] = [i for i, value in enumerate(values) if value == top]
        return marks

    def to_dict(self) -> dict:
        return {
            "schema_version": COMPARISON_SCHEMA_VERSION,
            "rows": [row.to_dict() for row in self.rows],
            "best": self.best(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Comparison":
        try:
            rows = [
                ComparisonRow(
                    name=str(row["name"]),
                    metrics=MetricsReport.from_dict(row["metrics"]),
                    parameters=row.get("parameters"),
                    latency_ms=row.get("latency_ms"),
                )
                for row in data["rows"]
            ]
        except (KeyError, TypeError) as exc:
            raise MetricsError(f"invalid comparison payload: {exc}") from exc
        return compare_models(rows)

    def render_table(self) -> str:
        """Aligned plain-text table; ``*`` marks the best value per column."""
        best = self.best()
        has_params = any(row.parameters is not None for row in self.rows)
        has_latency = any(row.latency_ms is not None for row in self.rows)

        header = ["Model"] + [label for _, label in SCORE_COLUMNS]
        if has_params:
            header.append("Params")
        if has_latency:
            header.append("ms/sent")

        body: List[List[str]] = []
        for index, row in enumerate(self.rows):
            pct = row.metrics.percentages()
            cells = [row.name]
            for column, _ in SCORE_COLUMNS:
                mark = BEST_MARK if index in best[column] else " "
                cells.append(f"{pct[column]:.1f}{mark}")
            if has_params:
                cells.append("-" if row.parameters is None else f"{row.parameters:,}")
            if has_latency:
                cells.append("-" if row.latency_ms is None else f"{row.latency_ms:.3f}")
            body.append(cells)

        widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]

        def fmt(cells: List[str]) -> str:
            first = cells[0].ljust(widths[0])
            rest = [cell.rjust(width) for cell, width in zip(cells[1:], widths[1:])]
            return "  ".join([first, *rest]).rstrip()

        lines = [fmt(header), "  ".join("-" * w for w in widths)]
        lines.extend(fmt(cells) for cells in body)
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        columns = ["name"] + [column for column, _ in SCORE_COLUMNS] + ["parameters", "latency_ms"]
        output = io.StringIO(newline="")
        writer = csv.DictWriter(output, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for row in self.rows:
            record: Dict[str, object] = {"name": row.name, **row.metrics.percentages()}
            record["parameters"] = "" if row.parameters is None else row.parameters
            record["latency_ms"] = "" if row.latency_ms is None else row.latency_ms
            writer.writerow(record)
        return output.getvalue()


def compare_models(
    reports: Sequence[Union[ComparisonRow, Tuple[str, MetricsReport]]],
) -> Comparison:
    """Rows in input order."""
    if not reports:
        raise MetricsError("nothing to compare: no reports given")
    rows = [item if isinstance(item, ComparisonRow) else ComparisonRow(item[0], item[1]) for item in reports]
    return Comparison(rows)


__all__ = ["ComparisonRow", "Comparison", "compare_models", "SCORE_COLUMNS"]
