"""Resumable evaluation loop: prompt, generate, parse, score, persist."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

from .backend import DEFAULT_MAX_TOKENS, DEFAULT_TEMPERATURE, GenerationRequest, request_hash
from .datasets import QAInstance
from .metrics import exact_match, rouge_l
from .prompting import (
    MethodSpec,
    PromptBundle,
    build_prompt,
    load_demonstrations,
    select_demonstrations,
    table_family,
)
from .records import RunRecord, append_record, completed_ids, now_rfc3339
from .table import table_size, unit_count
from .traces import parse_trace

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    spec: MethodSpec
    model_id: str
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS
    seed: int = 0
    concurrency: int = 1


def prompt_for(instance: QAInstance, config: RunConfig) -> PromptBundle:
    pool = load_demonstrations(config.spec, table_family(instance.dataset))
    demos = select_demonstrations(pool, config.spec.shots, config.seed)
    return build_prompt(config.spec, instance, demos)


def request_for(instance: QAInstance, config: RunConfig) -> GenerationRequest:
    bundle = prompt_for(instance, config)
    return GenerationRequest(
        messages=tuple((role.value, content) for role, content in bundle.messages),
        model_id=config.model_id,
        temperature=config.temperature,
        max_tokens=config.max_tokens,
        request_id=f"{instance.id}:{config.spec.tag}",
    )


def evaluate_one(instance: QAInstance, config: RunConfig, backend) -> RunRecord:
    started = now_rfc3339()
    request = request_for(instance, config)
    result = backend.generate(request)
    unit = config.spec.effective_unit
    trace = parse_trace(
        result.text,
        unit_count(instance.table, unit),
        unit,
        reported_tokens=result.completion_tokens,
    )
    scores = (
        exact_match(trace.final_answer, instance.gold_answers),
        rouge_l(trace.final_answer or "", instance.gold_answers),
    )
    return RunRecord(
        instance_id=instance.id,
        method=config.spec,
        prompt_hash=request_hash(request.messages, request.model_id),
        raw_output=result.text,
        trace=trace,
        scores=scores,
        table_size=table_size(instance.table),
        started=started,
        finished=now_rfc3339(),
        backend=result.backend,
        dataset=instance.dataset.value,
        qtype=instance.qtype,
        model_id=config.model_id,
    )


def run(
    instances: Sequence[QAInstance],
    config: RunConfig,
    backend,
    out_path,
    progress: Callable[[int, int, RunRecord], None] | None = None,
) -> int:
    """Evaluate every instance not already in ``out_path``; returns records written.

    Records are appended in input order by this thread only. An exception from
    the backend propagates after earlier records have been written.
    """
    done = completed_ids(out_path)
    todo = [inst for inst in instances if inst.id not in done]
    if done:
        log.info("resuming: %d of %d instances already scored", len(instances) - len(todo), len(instances))
    written = 0
    workers = max(1, config.concurrency)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for record in pool.map(lambda inst: evaluate_one(inst, config, backend), todo):
            append_record(out_path, record)
            written += 1
            if progress is not None:
                progress(written, len(todo), record)
    return written


def record_fixtures(instances: Sequence[QAInstance], config: RunConfig, outputs, backend) -> int:
    """Store ``outputs[instance.id]`` under the exact prompt a run would send.

    ``backend`` is a :class:`ScriptedBackend`; instances without an output are
    skipped. Returns the number of fixtures written.
    """
    n = 0
    for inst in instances:
        if inst.id not in outputs:
            continue
        backend.record_fixture(request_for(inst, config), outputs[inst.id], note=inst.id)
        n += 1
    return n
