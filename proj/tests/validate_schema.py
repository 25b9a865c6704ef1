"""Runs every report-producing CLI command on a small fixture and validates
the output against the published JSON schemas."""

import json
import pathlib
import subprocess
import sys

import jsonschema
from referencing import Registry, Resource


def main() -> int:
    cli, schema_dir, work = sys.argv[1], pathlib.Path(sys.argv[2]), pathlib.Path(sys.argv[3])
    work.mkdir(parents=True, exist_ok=True)
    store = work / "fixture.pve"

    def run(*args):
        subprocess.run([cli, *args], check=True, stdout=subprocess.DEVNULL)

    run("fixture", "--out", str(store), "--identities", "5", "--bonafide", "20", "--spoof", "8", "--dim", "32", "--datasets", "2")
    out = work / "reports"
    common = ["--store", str(store), "--out-dir", str(out)]
    run("eval", *common)
    run("sweep-ref", "--sizes", "1,3,10", "--repetitions", "2", *common)
    run("sweep-threshold", "--reference-size", "5", *common)
    run("hist", "--bins", "25", *common)

    schemas = {p.name: json.loads(p.read_text()) for p in schema_dir.glob("*.schema.json")}
    registry = Registry().with_resources(
        (name, Resource.from_contents(s)) for name, s in schemas.items())

    def validate(instance, schema_name):
        jsonschema.Draft202012Validator(schemas[schema_name], registry=registry).validate(instance)

    for report, schema in [("eval.json", "eval.schema.json"), ("sweep_ref.json", "sweep_ref.schema.json"),
                           ("sweep_threshold.json", "sweep_threshold.schema.json"), ("hist.json", "hist.schema.json")]:
        validate(json.loads((out / report).read_text()), schema)
        print(f"ok {report}")
    lines = (out / "trials.jsonl").read_text().splitlines()
    for line in lines:
        validate(json.loads(line), "trial.schema.json")
    print(f"ok trials.jsonl ({len(lines)} lines)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
