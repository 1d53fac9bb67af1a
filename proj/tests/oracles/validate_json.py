#!/usr/bin/env python3
"""validate_json.py SCHEMA FILE... -- exits non-zero on the first invalid file."""
import json
import sys

import jsonschema


def main(argv):
    schema = json.load(open(argv[1]))
    validator = jsonschema.Draft202012Validator(schema)
    for path in argv[2:]:
        errors = sorted(validator.iter_errors(json.load(open(path))), key=lambda e: list(e.path))
        if errors:
            for e in errors[:10]:
                print(f"{path}: {'/'.join(map(str, e.path))}: {e.message}", file=sys.stderr)
            return 1
        print(f"{path}: ok")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
