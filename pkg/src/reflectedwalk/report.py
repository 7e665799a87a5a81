"""Tabular convergence reports with deterministic CSV serialization."""

from __future__ import annotations

from dataclasses import dataclass, field


def format_cell(v) -> str:
    """Stable, round-trippable text for CSV cells (floats via repr)."""
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        v = v.item()  # numpy scalars -> plain python
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class ConvergenceReport:
    """Rows of (scale, value, reference, gaps, ...) plus a pass/fail verdict."""

    name: str
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    passed: bool = True
    note: str = ""

    def add_row(self, *cells):
        if len(cells) != len(self.columns):
            raise ValueError(f"row width {len(cells)} != {len(self.columns)}")
        self.rows.append(tuple(cells))

    def to_csv_text(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(format_cell(c) for c in row))
        return "\n".join(lines) + "\n"

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv_text())

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}" + (f" -- {self.note}" if self.note else "")
