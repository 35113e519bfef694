"""Benchmark loaders producing canonical :class:`QAInstance` lists.

The canonical format is JSONL, one instance per line::

    {"id": str, "question": str,
     "table": {"header_paths": [[str]], "rows": [[str]]},
     "gold_answers": [str], "dataset": str, "qtype": str | null}

The ``adapt_*`` functions convert the public release formats of WikiTQ,
HiTab and TableBench into that shape.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, TypeVar

from .errors import MalformedTable, SampleTooLarge, SchemaError
from .table import Table


class Dataset(str, enum.Enum):
    WIKITQ = "wikitq"
    HITAB = "hitab"
    TABLEBENCH = "tablebench"
    CUSTOM = "custom"

    @classmethod
    def parse(cls, value: str) -> "Dataset":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise SchemaError(f"unknown dataset {value!r}") from None


@dataclass(frozen=True)
class QAInstance:
    id: str
    question: str
    table: Table
    gold_answers: tuple[str, ...]
    dataset: Dataset = Dataset.CUSTOM
    qtype: str | None = None

    def __post_init__(self):
        golds = tuple(str(a) for a in self.gold_answers)
        if not golds:
            raise SchemaError(f"instance {self.id!r} has no gold answers")
        object.__setattr__(self, "gold_answers", golds)
        object.__setattr__(self, "dataset", Dataset.parse(self.dataset))

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "question": self.question,
            "table": self.table.to_dict(),
            "gold_answers": list(self.gold_answers),
            "dataset": self.dataset.value,
            "qtype": self.qtype,
        }


_REQUIRED = ("id", "question", "table", "gold_answers", "dataset")


def instance_from_dict(obj: dict, where: str = "") -> QAInstance:
    prefix = f"{where}: " if where else ""
    if not isinstance(obj, dict):
        raise SchemaError(f"{prefix}expected a JSON object")
    for key in _REQUIRED:
        if key not in obj:
            raise SchemaError(f"{prefix}missing field {key!r}")
    table = obj["table"]
    if not isinstance(table, dict) or "header_paths" not in table:
        raise SchemaError(f"{prefix}table must be an object with header_paths")
    if not isinstance(obj["gold_answers"], list):
        raise SchemaError(f"{prefix}gold_answers must be a list")
    try:
        return QAInstance(
            id=str(obj["id"]),
            question=str(obj["question"]),
            table=Table.from_dict(table),
            gold_answers=obj["gold_answers"],
            dataset=obj["dataset"],
            qtype=obj.get("qtype"),
        )
    except MalformedTable as exc:
        raise SchemaError(f"{prefix}{exc}") from exc
    except SchemaError as exc:
        raise SchemaError(f"{prefix}{exc}") from exc


def _check_unique(instances: Sequence[QAInstance]) -> None:
    seen: set[str] = set()
    for inst in instances:
        if inst.id in seen:
            raise SchemaError(f"duplicate instance id {inst.id!r}")
        seen.add(inst.id)


def load_canonical(path: str | os.PathLike) -> list[QAInstance]:
    instances = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            instances.append(instance_from_dict(obj, f"line {lineno}"))
    _check_unique(instances)
    return instances


def write_canonical(path: str | os.PathLike, instances: Iterable[QAInstance]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(inst.to_dict(), ensure_ascii=False) + "\n")
            n += 1
    return n


# -- WikiTQ ------------------------------------------------------------------
# data/*.tsv: id, utterance, context (table path relative to the release root),
# targetValue. Fields escape "\n" (newline), "\p" (pipe) and "\\" (backslash);
# multiple target values are joined with a bare "|".


def _wikitq_unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        if text[i] == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            out.append({"n": "\n", "p": "|", "\\": "\\"}.get(nxt, "\\" + nxt))
            i += 2
        else:
            out.append(text[i])
            i += 1
    return "".join(out)


def _read_wikitq_table(path: Path) -> Table:
    with open(path, encoding="utf-8", newline="") as fh:
        if path.suffix == ".tsv":
            grid = [[_wikitq_unescape(c) for c in line.rstrip("\r\n").split("\t")] for line in fh]
        else:
            grid = list(csv.reader(fh, escapechar="\\"))
    grid = [row for row in grid if row]
    if not grid:
        raise MalformedTable(f"{path}: empty table file")
    header, body = grid[0], grid[1:]
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise MalformedTable(f"{path}: line {i} has {len(row)} cells, expected {len(header)}")
    return Table.flat(header, body)


def adapt_wikitq(question_file: str | os.PathLike, table_dir: str | os.PathLike) -> list[QAInstance]:
    """Convert a WikiTQ question TSV; ``table_dir`` is the directory the
    ``context`` column is relative to (the release root)."""
    table_dir = Path(table_dir)
    instances = []
    cache: dict[str, Table] = {}
    with open(question_file, encoding="utf-8", newline="") as fh:
        header = fh.readline().rstrip("\r\n").split("\t")
        missing = {"id", "utterance", "context", "targetValue"} - set(header)
        if missing:
            raise SchemaError(f"{question_file}: header lacks {sorted(missing)}")
        col = {name: i for i, name in enumerate(header)}
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            fields = line.rstrip("\r\n").split("\t")
            if len(fields) != len(header):
                raise SchemaError(f"{question_file}: line {lineno} has {len(fields)} fields")
            context = fields[col["context"]]
            if context not in cache:
                cache[context] = _read_wikitq_table(table_dir / context)
            answers = [_wikitq_unescape(a) for a in fields[col["targetValue"]].split("|")]
            instances.append(
                QAInstance(
                    id=fields[col["id"]],
                    question=_wikitq_unescape(fields[col["utterance"]]),
                    table=cache[context],
                    gold_answers=answers,
                    dataset=Dataset.WIKITQ,
                )
            )
    _check_unique(instances)
    return instances


# -- HiTab -------------------------------------------------------------------
# JSONL samples {"id", "question", "answer": [...], "table_id"} with tables in
# raw form {"texts": [[...]], "top_header_rows_num": k, "merged_regions": [...]}
# stored as <tables_dir>/<table_id>.json (default: tables/raw next to the file),
# or inlined under "table".


def _hitab_header_paths(texts: list[list[str]], n_header_rows: int, merged: list[dict]) -> list[list[str]]:
    grid = [list(r) for r in texts[:n_header_rows]]
    for region in merged:
        r0, r1 = int(region["first_row"]), int(region["last_row"])
        c0, c1 = int(region["first_column"]), int(region["last_column"])
        if r0 >= n_header_rows:
            continue
        value = texts[r0][c0]
        for r in range(r0, min(r1, n_header_rows - 1) + 1):
            for c in range(c0, c1 + 1):
                grid[r][c] = value
    paths = []
    for c in range(len(texts[0])):
        path: list[str] = []
        for r in range(n_header_rows):
            seg = str(grid[r][c]).strip()
            if seg and (not path or path[-1] != seg):
                path.append(seg)
        paths.append(path or [""])
    return paths


def _hitab_table(raw: dict, where: str) -> Table:
    try:
        texts = [[str(c) for c in row] for row in raw["texts"]]
        k = int(raw.get("top_header_rows_num", 1))
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"{where}: bad raw table ({exc})") from exc
    if not texts or k < 1 or k > len(texts):
        raise SchemaError(f"{where}: raw table has no header rows")
    width = len(texts[0])
    if any(len(r) != width for r in texts):
        raise SchemaError(f"{where}: raw table is not rectangular")
    paths = _hitab_header_paths(texts, k, raw.get("merged_regions") or [])
    return Table(paths, texts[k:])


def _answer_list(value) -> list[str]:
    if isinstance(value, list):
        return [str(v) for v in value]
    return [str(value)]


def adapt_hitab(path: str | os.PathLike, tables_dir: str | os.PathLike | None = None) -> list[QAInstance]:
    path = Path(path)
    tables_dir = Path(tables_dir) if tables_dir else path.parent / "tables" / "raw"
    instances = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}: line {lineno}"
            try:
                # keep numeric literals exactly as written in the source
                obj = json.loads(line, parse_float=str, parse_int=str)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{where}: invalid JSON ({exc.msg})") from exc
            for key in ("id", "question", "answer"):
                if key not in obj:
                    raise SchemaError(f"{where}: missing field {key!r}")
            if "table" in obj:
                raw = obj["table"]
            elif "table_id" in obj:
                with open(tables_dir / f"{obj['table_id']}.json", encoding="utf-8") as tf:
                    raw = json.load(tf, parse_float=str, parse_int=str)
            else:
                raise SchemaError(f"{where}: needs 'table' or 'table_id'")
            instances.append(
                QAInstance(
                    id=str(obj["id"]),
                    question=str(obj["question"]),
                    table=_hitab_table(raw, where),
                    gold_answers=_answer_list(obj["answer"]),
                    dataset=Dataset.HITAB,
                    qtype=",".join(obj["aggregation"]) if obj.get("aggregation") else None,
                )
            )
    _check_unique(instances)
    return instances


# -- TableBench --------------------------------------------------------------
# JSONL {"id", "qtype", "qsubtype", "question", "answer",
#        "table": {"columns": [...], "data": [[...]]}}; "table" may also be a
# JSON-encoded string.


def adapt_tablebench(path: str | os.PathLike) -> list[QAInstance]:
    path = Path(path)
    instances = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}: line {lineno}"
            try:
                obj = json.loads(line, parse_float=str, parse_int=str)
                table = obj.get("table")
                if isinstance(table, str):
                    table = json.loads(table, parse_float=str, parse_int=str)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{where}: invalid JSON ({exc.msg})") from exc
            for key in ("id", "question", "answer", "table"):
                if key not in obj:
                    raise SchemaError(f"{where}: missing field {key!r}")
            if not isinstance(table, dict) or "columns" not in table or "data" not in table:
                raise SchemaError(f"{where}: table needs 'columns' and 'data'")
            try:
                tbl = Table.flat(
                    [str(c) for c in table["columns"]],
                    [["" if c is None else str(c) for c in row] for row in table["data"]],
                )
            except MalformedTable as exc:
                raise SchemaError(f"{where}: {exc}") from exc
            instances.append(
                QAInstance(
                    id=str(obj["id"]),
                    question=str(obj["question"]),
                    table=tbl,
                    gold_answers=_answer_list(obj["answer"]),
                    dataset=Dataset.TABLEBENCH,
                    qtype=obj.get("qtype"),
                )
            )
    _check_unique(instances)
    return instances


# -- sampling ----------------------------------------------------------------

T = TypeVar("T")


def _seeded_key(seed: int, key: str) -> bytes:
    return hashlib.sha256(f"{seed}\x00{key}".encode("utf-8")).digest()


def seeded_subset(items: Sequence[T], n: int, seed: int, key=str) -> list[T]:
    """Pick ``n`` items by ranking on a seeded hash of ``key(item)``.

    Independent of the Python ``random`` implementation, so the choice is the
    same on every platform and interpreter version. Selected items keep their
    input order.
    """
    if n < 0 or n > len(items):
        raise SampleTooLarge(f"cannot take {n} of {len(items)} items")
    ranked = sorted(range(len(items)), key=lambda i: (_seeded_key(seed, key(items[i])), i))
    chosen = sorted(ranked[:n])
    return [items[i] for i in chosen]


def sample(instances: Sequence[QAInstance], n: int, seed: int) -> list[QAInstance]:
    return seeded_subset(instances, n, seed, key=lambda inst: inst.id)
