"""Runs the homlab tool on each config and validates its outputs."""
import csv
import json
import pathlib
import subprocess
import sys

import jsonschema


def main() -> int:
    tool, schema_path, out_root, *configs = sys.argv[1:]
    schema = json.loads(pathlib.Path(schema_path).read_text())
    failures = 0
    for cfg in configs:
        cfg_path = pathlib.Path(cfg)
        command = json.loads(cfg_path.read_text())["command"]
        out = pathlib.Path(out_root) / cfg_path.stem
        proc = subprocess.run([tool, command, "--config", str(cfg_path), "--out", str(out)],
                              capture_output=True, text=True)
        if proc.returncode == 2:
            print(f"{cfg_path.name}: runtime error\n{proc.stdout}{proc.stderr}")
            failures += 1
            continue
        summary = json.loads((out / "summary.json").read_text())
        try:
            jsonschema.validate(summary, schema)
        except jsonschema.ValidationError as e:
            print(f"{cfg_path.name}: summary invalid: {e.message}")
            failures += 1
            continue
        lines = (out / "results.csv").read_text().splitlines()
        header = next(csv.reader([lines[1]]))
        if lines[0] != "#homlab-results-v1" or header[-3:] != ["started_at", "finished_at", "wall_seconds"]:
            print(f"{cfg_path.name}: bad csv header")
            failures += 1
            continue
        widths = {len(row) for row in csv.reader(lines[1:])}
        if widths != {len(header)}:
            print(f"{cfg_path.name}: ragged csv rows {sorted(widths)}")
            failures += 1
            continue
        print(f"{cfg_path.name}: ok (exit {proc.returncode}, {len(lines) - 2} rows)")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
