"""Append-only JSONL run records with resume support."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .backend import BackendKind
from .errors import SchemaError
from .metrics import Score, ScoreKind
from .prompting import MethodSpec
from .traces import ReasoningTrace

log = logging.getLogger(__name__)


def now_rfc3339() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds").replace("+00:00", "Z")


@dataclass(frozen=True)
class RunRecord:
    instance_id: str
    method: MethodSpec
    prompt_hash: str
    raw_output: str
    trace: ReasoningTrace
    scores: tuple[Score, ...]
    table_size: int
    started: str
    finished: str
    backend: BackendKind
    dataset: str = "custom"
    qtype: str | None = None
    model_id: str = ""

    def __post_init__(self):
        kinds = [s.kind for s in self.scores]
        if len(set(kinds)) != len(kinds):
            raise SchemaError(f"record {self.instance_id!r} has duplicate score kinds")
        object.__setattr__(self, "scores", tuple(self.scores))
        object.__setattr__(self, "backend", BackendKind(self.backend))

    def score(self, kind: ScoreKind) -> float | None:
        for s in self.scores:
            if s.kind is ScoreKind(kind):
                return s.value
        return None

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "dataset": self.dataset,
            "qtype": self.qtype,
            "method": self.method.to_dict(),
            "model_id": self.model_id,
            "prompt_hash": self.prompt_hash,
            "raw_output": self.raw_output,
            "trace": self.trace.to_dict(),
            "scores": [{"kind": s.kind.value, "value": s.value} for s in self.scores],
            "table_size": self.table_size,
            "timestamps": {"started": self.started, "finished": self.finished},
            "backend": self.backend.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunRecord":
        try:
            return cls(
                instance_id=str(data["instance_id"]),
                method=MethodSpec.from_dict(data["method"]),
                prompt_hash=data["prompt_hash"],
                raw_output=data["raw_output"],
                trace=ReasoningTrace.from_dict(data["trace"]),
                scores=tuple(Score(s["kind"], float(s["value"])) for s in data.get("scores", ())),
                table_size=int(data["table_size"]),
                started=data["timestamps"]["started"],
                finished=data["timestamps"]["finished"],
                backend=data["backend"],
                dataset=data.get("dataset", "custom"),
                qtype=data.get("qtype"),
                model_id=data.get("model_id", ""),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad run record: {exc}") from exc


def run_filename(dataset: str, spec: MethodSpec) -> str:
    return f"{dataset}.{spec.method.value}.{spec.unit.value}.{spec.shots}shot.jsonl"


def _drop_partial_tail(path: str | os.PathLike) -> None:
    # a crash mid-write leaves a line without "\n"; cut it before appending
    try:
        fh = open(path, "rb+")
    except FileNotFoundError:
        return
    with fh:
        size = fh.seek(0, os.SEEK_END)
        if size == 0:
            return
        fh.seek(size - 1)
        if fh.read(1) == b"\n":
            return
        fh.seek(0)
        data = fh.read()
        cut = data.rfind(b"\n") + 1
        log.warning("%s: dropping partial trailing line (%d bytes)", path, size - cut)
        fh.truncate(cut)


def append_record(path: str | os.PathLike, record: RunRecord) -> None:
    line = json.dumps(record.to_dict(), ensure_ascii=False, sort_keys=True) + "\n"
    _drop_partial_tail(path)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(line)
        fh.flush()
        os.fsync(fh.fileno())


def read_records(path: str | os.PathLike) -> list[RunRecord]:
    """Parse every record; an unparseable final line is skipped with a warning."""
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    while lines and not lines[-1].strip():
        lines.pop()
    records = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            if lineno == len(lines):
                log.warning("%s: skipping partial trailing line %d", path, lineno)
                break
            raise SchemaError(f"{path}: line {lineno} is not valid JSON ({exc.msg})") from exc
        records.append(RunRecord.from_dict(obj))
    return records


def completed_ids(path: str | os.PathLike) -> set[str]:
    if not Path(path).exists():
        return set()
    return {r.instance_id for r in read_records(path) if r.scores}
