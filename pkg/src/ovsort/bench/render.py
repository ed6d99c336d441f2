"""Rendering result rows as aligned tables, CSV, or JSON, and parsing them back."""

from __future__ import annotations

import csv
import io
import json
from typing import Callable, Sequence

from .grid import FAIL, ROW_FIELDS, SKIPPED, ResultRow

FORMATS = ("table", "csv", "json")

_INT = ("n", "p", "r", "s", "threads", "trials", "keylen", "seed", "max_bucket")
_FLOAT = ("a", "mean_time", "mean_baseline_sort", "mean_sample", "mean_splitter", "mean_split", "mean_merge", "max_expansion")
_OPTIONAL = ("p", "r", "a", "s", "max_bucket", "max_expansion")


def _convert(name: str, text: str):
    if text == "" and name in _OPTIONAL:
        return None
    if name in _INT:
        return int(text)
    if name in _FLOAT:
        return float(text)
    return text.encode("ascii").decode("unicode_escape")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        # repr keeps floats exact, so parsing gives back the same row
        return repr(value)
    if isinstance(value, str):
        # free text (error details) may hold newlines or NULs; keep each cell one ASCII line
        return value.encode("unicode_escape").decode("ascii")
    return str(value)


def render_csv(rows: Sequence[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_FIELDS)
    for row in rows:
        w.writerow([_cell(getattr(row, f)) for f in ROW_FIELDS])
    return buf.getvalue()


def parse_csv(text: str) -> list[ResultRow]:
    reader = csv.DictReader(io.StringIO(text))
    return [ResultRow(**{k: _convert(k, v) for k, v in rec.items()}) for rec in reader]


def render_json(rows: Sequence[ResultRow]) -> str:
    return json.dumps([{f: getattr(r, f) for f in ROW_FIELDS} for r in rows], indent=2)


def parse_json(text: str) -> list[ResultRow]:
    return [ResultRow(**rec) for rec in json.loads(text)]


# --------------------------------------------------------------------------
# column-aligned tables: one row per (n, base), one column per p; when the
# a (or r, or thread) list varies, that list becomes the columns instead


def _varies(rows: Sequence[ResultRow], attr: str) -> bool:
    return len({getattr(r, attr) for r in rows}) > 1


def _fmt_coord(attr: str, value) -> str:
    if value is None:
        return "default" if attr == "a" else "-"
    return f"{value:g}" if isinstance(value, float) else str(value)


def _cell_text(row: ResultRow) -> str:
    if row.status == SKIPPED:
        return "n/a"
    text = f"{row.mean_time:.2f}"
    return text + "!" if row.status == FAIL else text


def _column_attr(rows: Sequence[ResultRow]) -> str | None:
    if rows[0].algo == "baseline":
        return None
    for attr in ("a", "r", "threads"):
        if _varies(rows, attr):
            return attr
    return "p"


def _align(grid: list[list[str]]) -> str:
    widths = [max(len(line[i]) for line in grid) for i in range(len(grid[0]))]
    out = []
    for line in grid:
        out.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(line, widths))))
    return "\n".join(out)


def _render_block(rows: list[ResultRow]) -> str:
    col = _column_attr(rows)
    label_attrs = [a for a in ("n", "p", "r", "a", "threads") if a != col and (a == "n" or _varies(rows, a))]
    label_attrs.append("base")
    columns: list = []
    table: dict[tuple, dict] = {}
    for row in rows:
        key = tuple(getattr(row, a) for a in label_attrs)
        c = getattr(row, col) if col else "time"
        if c not in columns:
            columns.append(c)
        table.setdefault(key, {})[c] = row
    header = [" ".join(label_attrs)] + [f"{col}={_fmt_coord(col, c)}" if col else "time" for c in columns]
    grid = [header]
    for key, cells in table.items():
        label = " ".join(_fmt_coord(a, v) for a, v in zip(label_attrs, key))
        grid.append([label] + [_cell_text(cells[c]) if c in cells else "" for c in columns])
    algo = rows[0].algo
    title = f"{algo} (mean seconds over {rows[0].trials} trial(s), distribution {rows[0].distribution})"
    return title + "\n" + _align(grid)


def render_table(rows: Sequence[ResultRow]) -> str:
    if not rows:
        return "(no results)"
    blocks: dict[str, list[ResultRow]] = {}
    for row in rows:
        blocks.setdefault(row.algo, []).append(row)
    text = "\n\n".join(_render_block(b) for b in blocks.values())
    notes = []
    if any(r.status == FAIL for r in rows):
        notes.append("! = verification failed:")
        notes += [f"  {r.algo} n={r.n} p={r.p} base={r.base}: {r.detail}" for r in rows if r.status == FAIL]
    if any(r.status == SKIPPED for r in rows):
        notes.append("n/a = configuration not valid for this n")
    return text + ("\n" + "\n".join(notes) if notes else "")


RENDERERS: dict[str, Callable[[Sequence[ResultRow]], str]] = {
    "table": render_table,
    "csv": render_csv,
    "json": render_json,
}


def render(rows: Sequence[ResultRow], fmt: str) -> str:
    return RENDERERS[fmt](rows)
