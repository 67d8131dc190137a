"""Validate a run directory's JSON outputs against the schemas."""
import json
import pathlib
import sys

import jsonschema

root = pathlib.Path(__file__).resolve().parent.parent / "schemas"
out = pathlib.Path(sys.argv[1])
for name in ("per_replicate", "summary"):
    schema = json.loads((root / f"{name}.schema.json").read_text())
    doc = json.loads((out / f"{name}.json").read_text())
    jsonschema.validate(doc, schema, cls=jsonschema.Draft202012Validator)
    print(f"{name}.json ok")
