"""Build a scripted-backend fixture store from hand-written outputs.

    python scripts/record_fixtures.py --data tests/fixtures/e2e_instances.jsonl \
        --outputs tests/fixtures/e2e_outputs.json --store fixtures.jsonl

The outputs file maps instance id to completion text. Each text is stored under
the prompt hash that ``rot-harness run`` would compute for the same method,
model and seed, so a later scripted run replays it exactly.
"""

import argparse
import json

from rot_harness.backend import ScriptedBackend
from rot_harness.datasets import load_canonical
from rot_harness.prompting import Method, MethodSpec
from rot_harness.runner import RunConfig, record_fixtures
from rot_harness.table import TraversalUnit


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", required=True)
    ap.add_argument("--outputs", required=True)
    ap.add_argument("--store", required=True)
    ap.add_argument("--method", default="rot", choices=[m.value for m in Method])
    ap.add_argument("--unit", default="row", choices=[u.value for u in TraversalUnit])
    ap.add_argument("--shots", type=int, default=1)
    ap.add_argument("--model", default="scripted-model")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    spec = MethodSpec(Method(args.method), TraversalUnit(args.unit), args.shots)
    config = RunConfig(spec=spec, model_id=args.model, seed=args.seed)
    with open(args.outputs, encoding="utf-8") as fh:
        outputs = json.load(fh)
    instances = load_canonical(args.data)
    n = record_fixtures(instances, config, outputs, ScriptedBackend(args.store))
    missing = sorted({i.id for i in instances} - set(outputs))
    print(f"{n} fixtures written to {args.store}")
    if missing:
        print(f"no output for {len(missing)} instances: {', '.join(missing[:10])}")


if __name__ == "__main__":
    main()
