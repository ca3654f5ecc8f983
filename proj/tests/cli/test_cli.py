"""End-to-end checks of the kmland command-line tool against the published schemas.

Usage: test_cli.py <path-to-kmland-binary> <source-dir>
"""

import csv
import json
import os
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path

import jsonschema
from referencing import Registry, Resource

BINARY = None
SOURCE = None


def load_registry():
    registry = Registry()
    for path in sorted((SOURCE / "schemas").glob("*.schema.json")):
        schema = json.loads(path.read_text())
        registry = registry.with_resource(path.name, Resource.from_contents(schema))
    return registry


def validate(doc, schema_name):
    registry = load_registry()
    schema = json.loads((SOURCE / "schemas" / schema_name).read_text())
    jsonschema.Draft202012Validator(schema, registry=registry).validate(doc)


def run(*args, env=None, cwd=None):
    full_env = dict(os.environ)
    full_env.pop("KMLAND_OUT_DIR", None)
    if env:
        full_env.update(env)
    return subprocess.run([str(BINARY), *map(str, args)], capture_output=True, text=True, env=full_env,
                          cwd=cwd or SOURCE, timeout=600)


def header(path):
    with open(path, newline="") as f:
        return next(csv.reader(f))


def rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


class CliTest(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_verify_all_is_deterministic_and_valid(self):
        a, b = self.out / "a", self.out / "b"
        ra = run("verify", "--all", "--seed", 7, "--out", a)
        rb = run("verify", "--all", "--seed", 7, "--out", b)
        self.assertEqual(ra.returncode, 0, ra.stdout + ra.stderr)
        self.assertEqual(rb.returncode, 0, rb.stdout + rb.stderr)
        self.assertEqual((a / "verify_summary.json").read_bytes(), (b / "verify_summary.json").read_bytes())
        summary = json.loads((a / "verify_summary.json").read_text())
        validate(summary, "verify_summary.schema.json")
        self.assertTrue(summary["passed"])
        for cert in summary["certificates"]:
            for artifact in cert["artifacts"]:
                self.assertEqual(header(a / artifact),
                                 ["name", "measured", "expected", "tolerance", "relation", "passed", "informational"])
                self.assertEqual((a / artifact).read_bytes(), (b / artifact).read_bytes())

    def test_lloyd_from_split_merge_point_does_not_move(self):
        r = run("lloyd", "--model", "configs/prop2.json", "--init", "spurious", "--estimator", "analytic1d", "--out", self.out)
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertEqual(header(self.out / "trajectory.csv"), ["iter", "center_index", "x1", "objective"])
        traj = rows(self.out / "trajectory.csv")
        self.assertEqual(len(traj), 3)
        self.assertEqual({row["iter"] for row in traj}, {"0"})
        meta = json.loads((self.out / "meta.json").read_text())
        validate(meta, "meta.schema.json")
        self.assertTrue(meta["tables_only"])
        self.assertIsNone(meta["figure"])
        self.assertTrue(meta["run"]["converged"])
        self.assertLessEqual(meta["run"]["max_final_movement"], 1e-12)
        self.assertEqual(header(self.out / "model.csv"), ["component", "kind", "x1", "scale"])

    def test_panel_config_reaches_split_merge_class(self):
        r = run("run", "--config", "configs/panel_split_merge.json", "--out", self.out)
        self.assertEqual(r.returncode, 0, r.stderr)
        meta = json.loads((self.out / "meta.json").read_text())
        validate(meta, "meta.schema.json")
        self.assertEqual(meta["figure"], "trajectory2d")
        self.assertTrue(meta["classification"]["valid_partition"])
        kinds = sorted(b["kind"] for b in meta["classification"]["blocks"])
        self.assertEqual(kinds, ["many_fit_one", "one_fit_many", "one_fit_one"])
        self.assertEqual(header(self.out / "trajectory.csv"), ["iter", "center_index", "x1", "x2", "objective"])
        traj = rows(self.out / "trajectory.csv")
        iters = sorted({int(row["iter"]) for row in traj})
        self.assertEqual(iters, list(range(len(iters))))
        self.assertEqual(len(traj), 4 * len(iters))

    def test_truth_init_is_a_fixed_point_for_exact_estimator(self):
        model = '{"kind":"ball","centers":[[-2],[0],[2]],"scale":0.3}'
        r = run("lloyd", "--model", model, "--init", "truth", "--out", self.out)
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertEqual(len(rows(self.out / "trajectory.csv")), 3)

    def test_survey_outputs(self):
        args = ["survey", "--model", "configs/gmm4.json", "--restarts", 12, "--mc-n", 20000, "--seed", 1]
        a, b = self.out / "a", self.out / "b"
        ra = run(*args, "--out", a)
        rb = run(*args, "--out", b, "--workers", 3)
        self.assertEqual(ra.returncode, 0, ra.stdout + ra.stderr)
        self.assertEqual(rb.returncode, 0, rb.stdout + rb.stderr)
        self.assertEqual((a / "survey.json").read_bytes(), (b / "survey.json").read_bytes())
        survey = json.loads((a / "survey.json").read_text())
        validate(survey, "survey.schema.json")
        self.assertEqual(sum(survey["histogram"].values()), survey["converged"])
        self.assertEqual(len(survey["runs"]), 12)
        for run_ in survey["runs"]:
            self.assertEqual(header(a / run_["trajectory"]), ["iter", "center_index", "x1", "x2", "objective"])

    def test_classify_and_analyze_outputs(self):
        r = run("classify", "--model", "configs/prop2.json", "--init", "spurious", "--out", self.out)
        self.assertEqual(r.returncode, 0, r.stderr)
        validate(json.loads((self.out / "classification.json").read_text()), "classification.schema.json")
        self.assertEqual(header(self.out / "blocks.csv"), ["kind", "fitted", "true", "error", "bound"])

        r = run("analyze", "--model", "configs/prop2.json", "--init", "spurious", "--direction", "[[1],[-1],[0]]",
                "--out", self.out)
        self.assertEqual(r.returncode, 0, r.stderr)
        analysis = json.loads((self.out / "analysis.json").read_text())
        validate(analysis, "analysis.schema.json")
        self.assertEqual(header(self.out / "slice.csv"), ["t", "value", "stderr"])
        values = [float(row["value"]) for row in rows(self.out / "slice.csv")]
        mid = len(values) // 2
        self.assertTrue(all(values[q] > values[q + 1] for q in range(mid)))
        self.assertTrue(all(values[q] < values[q + 1] for q in range(mid, len(values) - 1)))

    def test_sample_and_env_output_dir(self):
        r = run("sample", "--model", "configs/gmm4.json", "--n", 40, "--seed", 3, env={"KMLAND_OUT_DIR": str(self.out)})
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertEqual(header(self.out / "samples.csv"), ["label", "x1", "x2"])
        self.assertEqual(len(rows(self.out / "samples.csv")), 40)

    def test_flags_override_config(self):
        cfg = self.out / "cfg.json"
        cfg.write_text(json.dumps({"task": "lloyd", "model": "configs/gmm4.json", "init": "kmeanspp", "seed": 4,
                                   "mc_n": 20000, "max_iters": 1}))
        r = run("run", "--config", cfg, "--out", self.out / "one")
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertEqual(json.loads((self.out / "one" / "meta.json").read_text())["run"]["iterations"], 1)
        r = run("lloyd", "--config", cfg, "--max-iters", 50, "--out", self.out / "many")
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertGreater(json.loads((self.out / "many" / "meta.json").read_text())["run"]["iterations"], 1)

    def test_sample_configs_validate(self):
        for path in sorted((SOURCE / "configs").glob("*.json")):
            doc = json.loads(path.read_text())
            if "task" in doc:
                validate(doc, "config.schema.json")
            else:
                validate({"model": doc}, "config.schema.json")

    def test_exit_codes(self):
        bad = self.out / "bad.json"
        bad.write_text(json.dumps({"task": "lloyd", "model": "configs/prop2.json", "unknown_key": 1}))
        self.assertEqual(run("run", "--config", bad).returncode, 2)
        self.assertEqual(run("sample", "--model", "configs/gmm4.json", "--out", self.out).returncode, 2)
        self.assertEqual(run("lloyd", "--model", '{"kind":"ball","centers":[[0]],"scale":-1}', "--out", self.out).returncode, 2)
        self.assertEqual(run("lloyd", "--model", '{"kind":"ball","centers":[[0]],"scale":1,"x":1}').returncode, 2)
        self.assertEqual(run("lloyd", "--bogus-flag").returncode, 2)
        self.assertEqual(run("lloyd", "--model", "configs/prop2.json", "--estimator", "nope").returncode, 2)
        degenerate = run("analyze", "--model", "configs/prop2.json", "--init", "given", "--centers", "[[0],[0],[1]]",
                         "--out", self.out)
        self.assertEqual(degenerate.returncode, 1, degenerate.stderr)


if __name__ == "__main__":
    BINARY = Path(sys.argv[1]).resolve()
    SOURCE = Path(sys.argv[2]).resolve()
    unittest.main(argv=[sys.argv[0], "-v"])
