"""Table representation, Markdown dialect and traversal-unit slicing."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import MalformedTable

HEADER_SEPARATOR = " / "

_NEWLINE = re.compile(r"\r\n|\r|\n")
_SEPARATOR_CELL = re.compile(r"^:?-{3,}:?$")


class TraversalUnit(str, enum.Enum):
    ROW = "row"
    COLUMN = "column"
    CELL = "cell"


@dataclass(frozen=True)
class Table:
    """A rectangular grid of cell text.

    ``header_paths`` holds one path per column, outermost segment first; flat
    tables use single-segment paths. Lists passed in are frozen to tuples.
    """

    header_paths: tuple[tuple[str, ...], ...]
    rows: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self):
        headers = tuple(tuple(str(s) for s in path) for path in self.header_paths)
        rows = tuple(tuple(str(c) for c in row) for row in self.rows)
        if not headers:
            raise MalformedTable("a table needs at least one column")
        for i, path in enumerate(headers):
            if not path:
                raise MalformedTable(f"header path {i} is empty")
        for i, row in enumerate(rows):
            if len(row) != len(headers):
                raise MalformedTable(
                    f"row {i} has {len(row)} cells, expected {len(headers)}"
                )
        object.__setattr__(self, "header_paths", headers)
        object.__setattr__(self, "rows", rows)

    @classmethod
    def flat(cls, headers: Iterable[str], rows: Iterable[Sequence[str]] = ()) -> "Table":
        return cls(tuple((h,) for h in headers), tuple(tuple(r) for r in rows))

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.header_paths)

    @property
    def headers(self) -> list[str]:
        return flatten_headers(self.header_paths, HEADER_SEPARATOR)

    def to_dict(self) -> dict:
        return {
            "header_paths": [list(p) for p in self.header_paths],
            "rows": [list(r) for r in self.rows],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Table":
        return cls(data["header_paths"], data.get("rows", ()))


def flatten_headers(header_paths: Iterable[Sequence[str]], separator: str = HEADER_SEPARATOR) -> list[str]:
    return [separator.join(path) for path in header_paths]


def table_size(table: Table) -> int:
    return table.n_rows * table.n_cols


def unit_count(table: Table, unit: TraversalUnit) -> int:
    """Number of steps in one full traversal of ``table`` by ``unit``."""
    unit = TraversalUnit(unit)
    if unit is TraversalUnit.ROW:
        return table.n_rows
    if unit is TraversalUnit.COLUMN:
        return table.n_cols
    return table_size(table)


def slice_unit(table: Table, unit: TraversalUnit, index: int) -> Table:
    """Return the sub-table covered by one traversal step (0-based ``index``).

    Cells are numbered row-major.
    """
    unit = TraversalUnit(unit)
    limit = unit_count(table, unit)
    if not 0 <= index < limit:
        raise IndexError(f"{unit.value} index {index} out of range for {limit} units")
    if unit is TraversalUnit.ROW:
        return Table(table.header_paths, (table.rows[index],))
    if unit is TraversalUnit.COLUMN:
        return Table((table.header_paths[index],), tuple((r[index],) for r in table.rows))
    r, c = divmod(index, table.n_cols)
    return Table((table.header_paths[c],), ((table.rows[r][c],),))


def _render_cell(text: str) -> str:
    return _NEWLINE.sub(" ", text).replace("|", "\\|")


def _render_line(cells: Iterable[str]) -> str:
    return "| " + " | ".join(cells) + " |"


def serialize_markdown(table: Table) -> str:
    lines = [
        _render_line(_render_cell(h) for h in table.headers),
        _render_line("---" for _ in range(table.n_cols)),
    ]
    lines.extend(_render_line(_render_cell(c) for c in row) for row in table.rows)
    return "\n".join(lines)


def _split_line(line: str, lineno: int) -> list[str]:
    line = line.strip()
    if len(line) < 2 or not line.startswith("|") or not line.endswith("|") or line.endswith("\\|"):
        raise MalformedTable(f"line {lineno}: not a pipe-delimited row")
    cells: list[str] = []
    buf: list[str] = []
    i, body = 0, line[1:-1]
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body) and body[i + 1] == "|":
            buf.append("|")
            i += 2
            continue
        if ch == "|":
            cells.append("".join(buf).strip())
            buf = []
        else:
            buf.append(ch)
        i += 1
    cells.append("".join(buf).strip())
    return cells


def parse_markdown(text: str) -> Table:
    """Inverse of :func:`serialize_markdown`.

    Header cells are split back into paths on ``" / "``.
    """
    lines = [ln for ln in text.strip("\n").split("\n")]
    if len(lines) < 2:
        raise MalformedTable("expected a header line and a separator line")
    header = _split_line(lines[0], 1)
    if header == [""] and lines[0].strip() in ("||", "| |"):
        raise MalformedTable("empty header")
    separator = _split_line(lines[1], 2)
    if len(separator) != len(header) or not all(_SEPARATOR_CELL.match(c) for c in separator):
        raise MalformedTable("line 2: missing or mismatched separator line")
    rows = []
    for lineno, line in enumerate(lines[2:], start=3):
        cells = _split_line(line, lineno)
        if len(cells) != len(header):
            raise MalformedTable(
                f"line {lineno}: ragged row with {len(cells)} cells, expected {len(header)}"
            )
        rows.append(cells)
    return Table(tuple(tuple(h.split(HEADER_SEPARATOR)) for h in header), rows)
