"""Run the CLI on the fixtures and validate every JSON output against schema/."""

import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema


def main():
    cli, data, schema_dir = sys.argv[1], pathlib.Path(sys.argv[2]), pathlib.Path(sys.argv[3])
    schemas = {p.name.removesuffix(".schema.json"): json.loads(p.read_text()) for p in schema_dir.glob("*.schema.json")}
    for s in schemas.values():
        jsonschema.Draft202012Validator.check_schema(s)

    tmp = pathlib.Path(tempfile.mkdtemp())
    runs = [
        ("test_report", ["test", "--manifest", data / "prop.json"]),
        ("test_report", ["test", "--manifest", data / "eq.json"]),
        ("test_report", ["test", "--manifest", data / "kron.json"]),
        ("pairwise_report", ["pairwise", "--manifest", data / "eq.json", "--p-sub", "10", "--n-rep", "5"]),
        ("scan_result", ["scan", "--manifest", data / "eq.json", "--p-sub", "8", "--n-rep", "10"]),
        ("size_result", ["simulate-size", "--scenario", "eq_case_b", "--p", "12", "--q", "4", "--n-low", "8",
                         "--n-high", "12", "--reps", "20"]),
        ("oracle_report", ["oracle", "--check", "lemma1", "--N", "500"]),
        ("oracle_report", ["oracle", "--check", "h1", "--p", "10", "--N", "500"]),
    ]
    failures = 0
    for name, args in runs:
        out = subprocess.run([cli, *map(str, args)], check=True, capture_output=True, text=True).stdout
        failures += check(schemas[name], json.loads(out), " ".join(map(str, args[:1])))
    for scenario in ["prop_case_b", "kron_case_II"]:
        path = tmp / f"{scenario}.csv"
        subprocess.run([cli, "simulate-power", "--scenario", scenario, "--p", "8", "--q", "4", "--n-low", "10",
                        "--n-high", "12", "--reps", "5", "--beta-max", "1", "--beta-step", "0.5", "--out", str(path)],
                       check=True, capture_output=True)
        failures += check(schemas["power_curve"], json.loads(path.with_suffix(".json").read_text()), scenario)

    golden = data / "golden"
    for path, name in [("test_prop.json", "test_report"), ("test_eq.json", "test_report"),
                       ("test_kron.json", "test_report"), ("pairwise.json", "pairwise_report"),
                       ("scan.json", "scan_result"), ("simulate_size.json", "size_result"),
                       ("simulate_power.json", "power_curve"), ("oracle_lemma1.json", "oracle_report")]:
        failures += check(schemas[name], json.loads((golden / path).read_text()), f"golden/{path}")
    return 1 if failures else 0


def check(schema, doc, label):
    errors = list(jsonschema.Draft202012Validator(schema).iter_errors(doc))
    for e in errors:
        print(f"{label}: {e.json_path}: {e.message}")
    print(f"{label}: {'ok' if not errors else 'INVALID'}")
    return 1 if errors else 0


if __name__ == "__main__":
    sys.exit(main())
