#!/usr/bin/env python3
"""validate_json.py SCHEMA FILE: exit 0 when FILE validates against SCHEMA."""
import json
import sys

import jsonschema

with open(sys.argv[1]) as f:
    schema = json.load(f)
with open(sys.argv[2]) as f:
    doc = json.load(f)
jsonschema.validate(doc, schema)
print("valid")
