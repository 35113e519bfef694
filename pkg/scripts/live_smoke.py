"""Run 10 WikiTQ instances against a live endpoint and report parse health.

Needs ROT_ENDPOINT and ROT_API_KEY. --data is a canonical JSONL file, e.g. the
output of ``rot-harness ingest --format wikitq``. This checks plumbing only;
accuracy on 10 questions says nothing about the method.
"""

import argparse
import sys
import tempfile
from pathlib import Path

from rot_harness.backend import RemoteBackend
from rot_harness.datasets import load_canonical, sample
from rot_harness.prompting import Method, MethodSpec
from rot_harness.records import read_records
from rot_harness.runner import RunConfig, run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", required=True)
    ap.add_argument("--model", required=True)
    ap.add_argument("--method", default="rot", choices=[m.value for m in Method])
    ap.add_argument("-n", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    instances = load_canonical(args.data)
    instances = sample(instances, min(args.n, len(instances)), args.seed)
    shots = 0 if args.method == Method.LONG_COT.value else 1
    config = RunConfig(spec=MethodSpec(Method(args.method), shots=shots), model_id=args.model, concurrency=2)
    backend = RemoteBackend.from_env()
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "smoke.jsonl"
        try:
            run(instances, config, backend, out)
        finally:
            backend.close()
        records = read_records(out)

    answered = sum(r.trace.final_answer is not None for r in records)
    for r in records:
        print(f"{r.instance_id:<12} T={r.trace.traversal_count} tokens={r.trace.completion_tokens:<6} "
              f"em={r.score('em'):.0f} answer={r.trace.final_answer!r}")
    print(f"{len(records)} records, {answered} with a final answer")
    sys.exit(0 if answered >= 1 else 1)


if __name__ == "__main__":
    main()
