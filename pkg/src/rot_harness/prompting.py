"""Prompt assembly for RoT, its ablations and the CoT baselines."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

from .datasets import Dataset, QAInstance, instance_from_dict, seeded_subset
from .errors import ConfigError, NotEnoughDemos
from .table import Table, TraversalUnit, serialize_markdown


class Method(str, enum.Enum):
    ROT = "rot"
    SHORT_COT = "short-cot"
    LONG_COT = "long-cot"
    ROT_NO_ITERATION = "rot-no-iter"
    ROT_NO_TRAVERSAL = "rot-no-traversal"

    @property
    def traverses(self) -> bool:
        return self in (Method.ROT, Method.ROT_NO_ITERATION)


class Role(str, enum.Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class MethodSpec:
    method: Method = Method.ROT
    unit: TraversalUnit = TraversalUnit.ROW
    shots: int = 1
    reasoning_model: bool = False

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "unit", TraversalUnit(self.unit))
        if self.shots < 0:
            raise ConfigError("shots must be non-negative")
        if self.method is Method.LONG_COT and self.shots != 0:
            raise ConfigError("long-cot is zero-shot; use --shots 0")

    @property
    def effective_unit(self) -> TraversalUnit:
        """Unit that steps are labelled with; non-traversal methods fall back to rows."""
        return self.unit if self.method.traverses else TraversalUnit.ROW

    @property
    def tag(self) -> str:
        return f"{self.method.value}.{self.unit.value}.{self.shots}shot"

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "unit": self.unit.value,
            "shots": self.shots,
            "reasoning_model": self.reasoning_model,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MethodSpec":
        return cls(
            method=data["method"],
            unit=data.get("unit", "row"),
            shots=int(data.get("shots", 0)),
            reasoning_model=bool(data.get("reasoning_model", False)),
        )


@dataclass(frozen=True)
class Demonstration:
    question: str
    table: Table
    reasoning: str
    answer: str


@dataclass(frozen=True)
class PromptBundle:
    system: str
    messages: tuple[tuple[Role, str], ...]

    def as_chat(self) -> list[dict]:
        return [{"role": role.value, "content": content} for role, content in self.messages]


_ORDER = {
    TraversalUnit.ROW: "from the top of the table to the bottom",
    TraversalUnit.COLUMN: "from left to right",
    TraversalUnit.CELL: (
        "reading each line of the table from left to right and the lines from top "
        "to bottom, so the cells are numbered 1, 2, 3, ... in that order"
    ),
}


def table_family(dataset: Dataset) -> str:
    return "hierarchical" if Dataset(dataset) is Dataset.HITAB else "flat"


def _asset(*parts: str):
    return resources.files("rot_harness").joinpath("/".join(("assets",) + parts))


def instruction_version() -> str:
    return _asset("instructions", "VERSION").read_text(encoding="utf-8").strip()


def instruction_text(spec: MethodSpec, family: str = "flat") -> str:
    template = _asset("instructions", f"{spec.method.value}.{family}.txt").read_text(encoding="utf-8")
    unit = spec.unit.value
    return template.strip().format(unit=unit, Unit=unit.capitalize(), order=_ORDER[spec.unit])


def demo_variant(spec: MethodSpec) -> str | None:
    if spec.method is Method.LONG_COT:
        return None
    if spec.method.traverses:
        return f"{spec.method.value}-{spec.unit.value}"
    return spec.method.value


def load_demonstrations(spec: MethodSpec, family: str = "flat") -> list[Demonstration]:
    """The shipped demonstration pool matching ``spec`` and the table family."""
    variant = demo_variant(spec)
    if variant is None:
        return []
    path = _asset("demos", f"{family}.{variant}.jsonl")
    demos = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            obj = json.loads(line)
            inst = instance_from_dict(obj)
            demos.append(Demonstration(inst.question, inst.table, obj["reasoning"], obj["answer"]))
    return demos


def select_demonstrations(pool: Sequence[Demonstration], k: int, seed: int) -> list[Demonstration]:
    if k > len(pool):
        raise NotEnoughDemos(f"{k} demonstrations requested, pool has {len(pool)}")
    return seeded_subset(pool, k, seed, key=lambda d: d.question)


def render_user(question: str, table: Table) -> str:
    return f"Table:\n{serialize_markdown(table)}\n\nQuestion: {question}"


def build_prompt(spec: MethodSpec, instance: QAInstance, demos: Sequence[Demonstration]) -> PromptBundle:
    if len(demos) < spec.shots:
        raise NotEnoughDemos(f"{spec.shots} shots requested, {len(demos)} demonstrations given")
    system = instruction_text(spec, table_family(instance.dataset))
    messages: list[tuple[Role, str]] = [(Role.SYSTEM, system)]
    for demo in demos[: spec.shots]:
        messages.append((Role.USER, render_user(demo.question, demo.table)))
        messages.append((Role.ASSISTANT, demo.reasoning))
    messages.append((Role.USER, render_user(instance.question, instance.table)))
    return PromptBundle(system=system, messages=tuple(messages))
