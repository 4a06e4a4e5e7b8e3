# Copyright 2026 The pipesynth Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""End-to-end checks of the pipesynth binary.

Runs every subcommand twice with equal seeds, validates each report against
schemas/report.schema.json, compares the two reports with timestamps and
timing stripped, and checks exit codes of the error paths.
"""

import argparse
import json
import os
import subprocess
import sys
import tempfile

import jsonschema

FAILURES = []


def check(condition, message):
    print(("ok   " if condition else "FAIL ") + message)
    if not condition:
        FAILURES.append(message)


def strip(node):
    if isinstance(node, dict):
        return {k: strip(v) for k, v in node.items() if k not in ("generated_at", "timing")}
    if isinstance(node, list):
        return [strip(v) for v in node]
    return node


def run(argv, env=None):
    merged = dict(os.environ)
    merged.update(env or {})
    return subprocess.run(argv, capture_output=True, text=True, env=merged, timeout=600)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--pipesynth", required=True)
    parser.add_argument("--executor", required=True)
    parser.add_argument("--schema", required=True)
    parser.add_argument("--grammars", required=True)
    parser.add_argument("--data", required=True)
    args = parser.parse_args()

    schema = json.load(open(args.schema))
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)
    cls = os.path.join(args.grammars, "classification.grammar")
    reg = os.path.join(args.grammars, "regression.grammar")
    tmp = tempfile.mkdtemp(prefix="pipesynth_cli_")
    exe = args.pipesynth
    echo_cmd = "%s --mode echo --grammar %s" % (args.executor, cls)
    fast = ["--simulations", "16", "--episodes-per-iteration", "4", "--gradient-steps", "4"]
    ckpt = os.path.join(tmp, "pre.ckpt")

    commands = {
        "synth": [exe, "synth", "--grammar", cls, "--dataset", "surrogate:7", "--seed", "3",
                  "--budget-episodes", "10"] + fast,
        "synth-regression": [exe, "synth", "--grammar", reg, "--task", "regression",
                             "--dataset", "surrogate:4", "--budget-evaluations", "40"] + fast,
        "synth-edit": [exe, "synth", "--grammar", cls, "--mode", "edit", "--dataset", "surrogate:2",
                       "--budget-episodes", "3"] + fast,
        "synth-external": [exe, "synth", "--grammar", cls, "--evaluator", "external",
                           "--executor-cmd", echo_cmd,
                           "--dataset", os.path.join(args.data, "manifest.json") + "#surrogate_7",
                           "--budget-episodes", "3"] + fast,
        "compare-grammar": [exe, "compare-grammar", "--grammar", cls, "--seeds", "1-2",
                            "--budget-episodes", "3"] + fast,
        "ablate": [exe, "ablate", "--grammar", cls, "--seeds", "1,2", "--repetitions", "2",
                   "--budget-evaluations", "50"] + fast,
        "pretrain": [exe, "pretrain", "--grammar", cls, "--seeds", "1-3", "--iterations", "2",
                     "--checkpoint-out", ckpt] + fast,
        "warmstart-eval": [exe, "warmstart-eval", "--grammar", cls, "--dataset", "surrogate:9",
                           "--checkpoint", ckpt, "--repetitions", "2",
                           "--budget-evaluations", "50"] + fast,
        "grammar-stats": [exe, "grammar-stats", "--grammar", cls],
    }
    for name, argv in commands.items():
        reports = []
        for attempt in range(2):
            out = os.path.join(tmp, "%s.%d.json" % (name, attempt))
            result = run(argv + ["--out", out])
            check(result.returncode == 0, "%s exits 0 (stderr: %s)" % (name, result.stderr.strip()[:200]))
            if result.returncode != 0:
                break
            report = json.load(open(out))
            errors = sorted(validator.iter_errors(report), key=str)
            check(not errors, "%s report matches schema%s" % (name, "" if not errors else ": " + errors[0].message))
            reports.append(report)
        if len(reports) == 2:
            check(json.dumps(strip(reports[0]), sort_keys=True) == json.dumps(strip(reports[1]), sort_keys=True),
                  "%s reports identical modulo timestamps" % name)

    # synth prints the pipeline and its score; the echo executor plants 0.42.
    result = run(commands["synth-external"])
    lines = result.stdout.strip().splitlines()
    check(len(lines) == 2 and float(lines[1]) == 0.42, "external synth reports the planted score")
    prov = os.path.join(tmp, "synth.0.json.provenance.jsonl")
    entries = [json.loads(l) for l in open(prov)] if os.path.exists(prov) else []
    check(len(entries) == 10 and all("moves" in e for e in entries), "synth writes one provenance line per episode")

    # Executor command from the environment.
    env_argv = [a for a in commands["synth-external"] if a not in ("--executor-cmd", echo_cmd)]
    result = run(env_argv, env={"PIPESYNTH_EXECUTOR_CMD": echo_cmd})
    check(result.returncode == 0, "executor command taken from PIPESYNTH_EXECUTOR_CMD")

    csv_path = os.path.join(tmp, "pairs.csv")
    result = run(commands["compare-grammar"] + ["--csv", csv_path, "--out", os.path.join(tmp, "c.json")])
    rows = open(csv_path).read().strip().splitlines() if os.path.exists(csv_path) else []
    check(len(rows) == 3 and rows[0].startswith("dataset,"), "compare-grammar writes paired CSV rows")

    log_path = os.path.join(tmp, "run.jsonl")
    run(commands["synth"] + ["--run-log", log_path])
    log = [json.loads(l) for l in open(log_path)] if os.path.exists(log_path) else []
    check(len(log) > 0 and all("event" in e for e in log), "run log is JSON lines with events")

    # Error paths.
    cases = [
        ("missing grammar file", [exe, "synth", "--grammar", "/nonexistent.grammar", "--dataset", "surrogate:1"], 2),
        ("zero budget", [exe, "synth", "--grammar", cls, "--dataset", "surrogate:1", "--budget-episodes", "0"], 2),
        ("unknown flag", [exe, "synth", "--grammar", cls, "--dataset", "surrogate:1", "--bogus"], 2),
        ("no subcommand", [exe], 2),
        ("bad mode", [exe, "synth", "--grammar", cls, "--dataset", "surrogate:1", "--mode", "nope"], 2),
        ("cap below one", [exe, "grammar-stats", "--grammar", cls, "--max-terminals", "0"], 2),
        ("external without command", [exe, "synth", "--grammar", cls, "--evaluator", "external",
                                      "--dataset", os.path.join(args.data, "manifest.json")], 2),
        ("checkpoint for another grammar", [exe, "synth", "--grammar", reg, "--task", "regression",
                                            "--dataset", "surrogate:1", "--checkpoint", ckpt], 2),
        ("executor crash", [exe, "synth", "--grammar", cls, "--evaluator", "external",
                            "--executor-cmd", "%s --mode crash --grammar %s" % (args.executor, cls),
                            "--dataset", os.path.join(args.data, "manifest.json"), "--budget-episodes", "2"], 3),
        ("executor missing primitives", [exe, "synth", "--grammar", cls, "--evaluator", "external",
                                         "--executor-cmd", "%s --primitives SVC" % args.executor,
                                         "--dataset", os.path.join(args.data, "manifest.json")], 3),
        ("every evaluation failed", [exe, "synth", "--grammar", cls, "--evaluator", "external",
                                     "--executor-cmd", "%s --mode malformed --grammar %s" % (args.executor, cls),
                                     "--dataset", os.path.join(args.data, "manifest.json"),
                                     "--budget-episodes", "2"] + fast, 3),
    ]
    for name, argv, expected in cases:
        env = {"PIPESYNTH_EXECUTOR_CMD": ""}
        result = run(argv, env=env)
        check(result.returncode == expected,
              "%s exits %d (got %d: %s)" % (name, expected, result.returncode, result.stderr.strip()[:160]))

    print("%d failure(s)" % len(FAILURES))
    return 1 if FAILURES else 0


if __name__ == "__main__":
    sys.exit(main())
