"""Command-line entry point: ``rot-harness {ingest,run,score,analyze,simulate}``.

Exit codes: 0 success, 2 usage/config/data error, 3 backend failure,
1 when ``simulate`` finds a counterexample.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import analysis, datasets, formal
from .backend import (
    DEFAULT_CONCURRENCY,
    DEFAULT_MAX_TOKENS,
    DEFAULT_TEMPERATURE,
    ENDPOINT_ENV,
    RemoteBackend,
    ScriptedBackend,
)
from .errors import ConfigError, EndpointError, FixtureMiss, HarnessError
from .metrics import ScoreKind, aggregate
from .prompting import Method, MethodSpec
from .records import read_records, run_filename
from .runner import RunConfig, run
from .table import TraversalUnit

log = logging.getLogger("rot_harness")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BACKEND = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(args, payload, text: str) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


# -- ingest ------------------------------------------------------------------


def cmd_ingest(args) -> int:
    fmt, paths = args.format, args.inputs
    if fmt == "wikitq":
        if len(paths) != 2:
            raise ConfigError("wikitq needs --in QUESTIONS.tsv TABLE_ROOT")
        instances = datasets.adapt_wikitq(paths[0], paths[1])
    elif fmt == "hitab":
        if len(paths) not in (1, 2):
            raise ConfigError("hitab needs --in SAMPLES.jsonl [TABLES_DIR]")
        instances = datasets.adapt_hitab(*paths)
    elif fmt == "tablebench":
        instances = [i for p in paths for i in datasets.adapt_tablebench(p)]
    else:
        instances = [i for p in paths for i in datasets.load_canonical(p)]
    if args.sample is not None:
        instances = datasets.sample(instances, args.sample, args.seed)
    n = datasets.write_canonical(args.out, instances)
    _emit(args, {"instances": n, "out": str(args.out)}, f"{n} instances written to {args.out}")
    return EXIT_OK


# -- run ---------------------------------------------------------------------


def _backend(args):
    if args.backend == "scripted":
        if not args.fixtures:
            raise ConfigError("--backend scripted needs --fixtures PATH")
        if not Path(args.fixtures).exists():
            raise ConfigError(f"fixture store {args.fixtures} does not exist")
        return ScriptedBackend(args.fixtures)
    return RemoteBackend.from_env(endpoint=args.endpoint, max_in_flight=args.concurrency)


def cmd_run(args) -> int:
    spec = MethodSpec(
        method=Method(args.method),
        unit=TraversalUnit(args.unit),
        shots=args.shots,
        reasoning_model=args.reasoning_model,
    )
    instances = datasets.load_canonical(args.data)
    if args.limit is not None:
        instances = datasets.sample(instances, min(args.limit, len(instances)), args.seed)
    out = args.out
    if out is None:
        tag = instances[0].dataset.value if instances else "empty"
        out = Path(args.out_dir) / run_filename(tag, spec)
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    config = RunConfig(
        spec=spec,
        model_id=args.model,
        temperature=args.temperature,
        max_tokens=args.max_tokens,
        seed=args.seed,
        concurrency=args.concurrency,
    )
    backend = _backend(args)

    def progress(i, total, record):
        if not args.quiet:
            print(
                f"[{i}/{total}] {record.instance_id} T={record.trace.traversal_count} "
                f"answer={record.trace.final_answer!r}",
                file=sys.stderr,
            )

    t0 = time.monotonic()
    try:
        written = run(instances, config, backend, out, progress=progress)
    finally:
        if hasattr(backend, "close"):
            backend.close()
    _emit(
        args,
        {"written": written, "out": str(out), "seconds": round(time.monotonic() - t0, 3)},
        f"{written} new records appended to {out}",
    )
    return EXIT_OK


# -- score / analyze -----------------------------------------------------------


def cmd_score(args) -> int:
    kind = ScoreKind(args.metric)
    records = read_records(args.records)
    summary = aggregate(records, kind)
    payload = {
        "metric": kind.value,
        "mean": summary.mean,
        "count": summary.count,
        "by_qtype": {k: {"mean": m, "count": n} for k, (m, n) in summary.by_qtype.items()},
    }
    lines = [f"{kind.value}: {summary.mean:.4f} over {summary.count} records"]
    if len(summary.by_qtype) > 1:
        lines.append(
            analysis.format_table(
                ["qtype", "mean", "n"], [[k, m, n] for k, (m, n) in summary.by_qtype.items()]
            )
        )
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


def _report(name: str, record_sets, edges):
    records = [r for _, rs in record_sets for r in rs]
    if name == "traversals":
        hist = analysis.traversal_histogram(records)
        headers = ["traversals", "share", "mean_score"]
        rows = [[k, share, score] for k, (share, score) in hist.items()]
    elif name == "lengths":
        headers = ["set", "mean_tokens_correct", "mean_tokens_incorrect"]
        rows = [[n, *analysis.length_comparison(rs)] for n, rs in record_sets]
    elif name == "sizes":
        headers = ["set", "bin", "n", "mean_score"]
        rows = [
            [n, b.label, b.n, b.mean_score]
            for n, rs in record_sets
            for b in analysis.size_bins(rs, edges)
        ]
    else:
        headers = ["set", "method", "unit", "shots", "n", "mean_score", "mean_traversals", "mean_tokens"]
        rows = [
            [s.name, s.method, s.unit, s.shots, s.n, s.mean_score, s.mean_traversals, s.mean_tokens]
            for s in analysis.compare_runs(record_sets)
        ]
    return headers, rows


def cmd_analyze(args) -> int:
    record_sets = [(Path(p).name, read_records(p)) for p in args.records]
    edges = args.bin_edges or analysis.DEFAULT_SIZE_EDGES
    headers, rows = _report(args.report, record_sets, edges)
    if args.csv:
        Path(args.csv).write_text(analysis.to_csv(headers, rows), encoding="utf-8")
    _emit(
        args,
        {"report": args.report, "columns": headers, "rows": rows},
        analysis.format_table(headers, rows),
    )
    return EXIT_OK


# -- simulate ------------------------------------------------------------------


def cmd_simulate(args) -> int:
    t0 = time.monotonic()
    report = formal.verify_subset(args.max_rows, workers=args.workers)
    elapsed = time.monotonic() - t0
    payload = dict(report.summary(), per_m=report.per_m, seconds=round(elapsed, 3))
    _emit(args, payload, report.text())
    return EXIT_OK if report.ok else EXIT_FAIL


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rot-harness", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--json", action="store_true", help="machine-readable output")
        return p

    p = common(sub.add_parser("ingest", help="convert a benchmark file to canonical JSONL"))
    p.add_argument("--format", required=True, choices=["wikitq", "hitab", "tablebench", "canonical"])
    p.add_argument("--in", dest="inputs", nargs="+", required=True, metavar="PATH")
    p.add_argument("--out", required=True)
    p.add_argument("--sample", type=int, help="keep a seeded subset of this size")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_ingest)

    p = common(sub.add_parser("run", help="evaluate a method over a canonical data file"))
    p.add_argument("--data", required=True)
    p.add_argument("--method", default="rot", choices=[m.value for m in Method])
    p.add_argument("--unit", default="row", choices=[u.value for u in TraversalUnit])
    p.add_argument("--shots", type=int, default=1)
    p.add_argument("--reasoning-model", action="store_true")
    p.add_argument("--backend", default="remote", choices=["remote", "scripted"])
    p.add_argument("--fixtures", help="fixture store for the scripted backend")
    p.add_argument("--model", default="default")
    p.add_argument("--endpoint", default=os.environ.get(ENDPOINT_ENV))
    p.add_argument("--temperature", type=float, default=DEFAULT_TEMPERATURE)
    p.add_argument("--max-tokens", type=int, default=DEFAULT_MAX_TOKENS)
    p.add_argument("--concurrency", type=int, default=DEFAULT_CONCURRENCY)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--limit", type=int, help="evaluate a seeded subset of this size")
    p.add_argument("--out", help="record file (default: OUT_DIR/{dataset}.{method}.{unit}.{shots}shot.jsonl)")
    p.add_argument("--out-dir", default="runs")
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_run)

    p = common(sub.add_parser("score", help="mean score of a record file"))
    p.add_argument("--records", required=True)
    p.add_argument("--metric", default="em", choices=[k.value for k in ScoreKind])
    p.set_defaults(func=cmd_score)

    p = common(sub.add_parser("analyze", help="analysis reports over record files"))
    p.add_argument("--records", nargs="+", required=True)
    p.add_argument("--report", required=True, choices=["traversals", "lengths", "sizes", "compare"])
    p.add_argument("--bin-edges", type=int, nargs="+")
    p.add_argument("--csv", help="also write the report as CSV")
    p.set_defaults(func=cmd_analyze)

    p = common(sub.add_parser("simulate", help="check Long CoT orders against row-wise passes"))
    p.add_argument("--max-rows", type=int, default=6)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (EndpointError, FixtureMiss) as exc:
        print(f"error: backend failure: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (HarnessError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
