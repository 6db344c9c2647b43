"""Bundle persistence and the command-line pipeline."""

import json
import subprocess
import sys

import numpy as np
import pytest

from psm.bundle import ModelBundle, load_bundle, save_bundle
from psm.errors import BundleFormatError


def psm_cli(*args, cwd=None):
    """Run the CLI in-process-like via subprocess for true exit codes."""
    return subprocess.run(
        [sys.executable, "-m", "psm.cli", *args],
        capture_output=True, text=True, cwd=cwd,
    )


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """analyze + run + fit on the corpus, kept small for speed."""
    root = tmp_path_factory.mktemp("pipeline")
    static = root / "static.json"
    trace = root / "trace.jsonl"
    bundle = root / "bundle.psm"
    r1 = psm_cli("analyze", "corpus/nutrition_advisor.ml0", "-o", str(static))
    assert r1.returncode == 0, r1.stderr
    r2 = psm_cli("run", "corpus/nutrition_advisor.ml0", "--seed", "11",
                 "--iterations", "1500", "-o", str(trace))
    assert r2.returncode == 0, r2.stderr
    r3 = psm_cli("fit", str(static), str(trace), "-o", str(bundle),
                 "--src", "corpus/nutrition_advisor.ml0")
    assert r3.returncode == 0, r3.stderr
    return {"root": root, "static": static, "trace": trace, "bundle": bundle}


class TestBundle:
    def test_round_trip_bit_exact_parameters(self, pipeline):
        bundle = load_bundle(pipeline["bundle"])
        resaved = pipeline["root"] / "resaved.psm"
        save_bundle(bundle, resaved)
        again = load_bundle(resaved)
        da = bundle.network.nodes["Person"].density
        db = again.network.nodes["Person"].density
        assert np.array_equal(da.means, db.means)
        assert np.array_equal(da.covs, db.covs)
        assert bundle.content_hash == again.content_hash
        # resave of a loaded bundle is byte-identical
        assert (pipeline["root"] / "resaved.psm").read_bytes() == pipeline["bundle"].read_bytes()

    def test_version_mismatch_rejected(self, pipeline, tmp_path):
        import zipfile

        bad = tmp_path / "bad.psm"
        with zipfile.ZipFile(pipeline["bundle"]) as src, zipfile.ZipFile(bad, "w") as dst:
            for name in src.namelist():
                data = src.read(name)
                if name == "manifest.json":
                    m = json.loads(data)
                    m["format"] = "psm-bundle/99"
                    data = json.dumps(m).encode()
                dst.writestr(name, data)
        with pytest.raises(BundleFormatError, match="psm-bundle/99"):
            load_bundle(bad)

    def test_not_a_zip(self, tmp_path):
        path = tmp_path / "nope.psm"
        path.write_text("not a bundle")
        with pytest.raises(BundleFormatError):
            load_bundle(path)

    def test_provenance_recorded(self, pipeline):
        bundle = load_bundle(pipeline["bundle"])
        prov = bundle.provenance
        assert set(prov) >= {"source_sha256", "trace_sha256", "seed", "fit_config"}
        assert "created" not in prov  # timestamps are opt-in
        assert bundle.source is not None


class TestCliCommands:
    def test_query_probability(self, pipeline, corpus_rows):
        r = psm_cli("query", str(pipeline["bundle"]), "P(Person.weight > 80)")
        assert r.returncode == 0, r.stderr
        payload = json.loads(r.stdout)
        assert 0.0 <= payload["probability"] <= 1.0
        assert payload["provenance"]["bundle"]

    def test_query_distribution_with_plot(self, pipeline):
        out = pipeline["root"] / "plot.svg"
        r = psm_cli("query", str(pipeline["bundle"]),
                    "DIST(Person.weight | 169 < Person.height < 170)",
                    "--plot", str(out))
        assert r.returncode == 0, r.stderr
        svg = out.read_text()
        assert svg.startswith("<svg") and "<rect" in svg

    def test_detect_value(self, pipeline):
        r = psm_cli("detect", str(pipeline["bundle"]), "--node", "Person",
                    "--value", "weight=-10")
        assert r.returncode == 0, r.stderr
        report = json.loads(r.stdout)
        assert report["detected"] is True
        assert report["score"] < 0.001

    def test_detect_with_trace(self, pipeline):
        live = pipeline["root"] / "live.jsonl"
        r0 = psm_cli("run", "corpus/nutrition_advisor_anomaly.ml0", "--seed", "2",
                     "--iterations", "1", "-o", str(live))
        assert r0.returncode == 0
        r = psm_cli("detect", str(pipeline["bundle"]), "--node", "Person",
                    "--value", "weight=-10", "--trace", str(live))
        report = json.loads(r.stdout)
        assert report["ripple_distance"] == 1
        assert report["ripple"][0]["node"] == "NutritionAdvisor.advice"

    def test_gentest_and_emit(self, pipeline):
        suite_path = pipeline["root"] / "suite.json"
        emit_dir = pipeline["root"] / "drivers"
        r = psm_cli("gentest", str(pipeline["bundle"]), "--target",
                    "NutritionAdvisor.advice", "--stratum", "rare", "-n", "5",
                    "--seed", "3", "-o", str(suite_path), "--emit-ml0", str(emit_dir))
        assert r.returncode == 0, r.stderr
        suite = json.loads(suite_path.read_text())
        assert suite["achieved"] == 5
        assert (emit_dir / "suite_rare.ml0").exists()
        r2 = psm_cli("run", str(emit_dir / "suite_rare.ml0"), "--seed", "0",
                     "--iterations", "1", "-o", str(pipeline["root"] / "suite_trace.jsonl"))
        assert r2.returncode == 0
        assert "0 aborts" in r2.stdout

    def test_simulate_command(self, pipeline):
        out = pipeline["root"] / "sim.json"
        r = psm_cli("simulate", str(pipeline["bundle"]), "--entry",
                    "NutritionAdvisor.advice", "-n", "500", "--seed", "4",
                    "--set", "param.Person.height=168.59",
                    "--set", "param.Person.weight=69.54", "-o", str(out))
        assert r.returncode == 0, r.stderr
        sim = json.loads(out.read_text())
        mean = sim["per_node"]["BmiService.bmi"]["return"]["mean"]
        assert abs(mean - 24.466) < 0.5

    def test_diff_self_compatible(self, pipeline):
        r = psm_cli("diff", str(pipeline["bundle"]), str(pipeline["bundle"]))
        assert r.returncode == 0, r.stderr
        report = json.loads(r.stdout)
        bits = [e["divergence_bits"] for e in report["entries"]
                if e["divergence_bits"] is not None]
        assert all(b < 0.01 for b in bits)


class TestUniverseFilter:
    def test_filtered_pipeline_builds_person_only(self, pipeline, tmp_path):
        static = tmp_path / "static.json"
        bundle = tmp_path / "bundle.psm"
        r = psm_cli("analyze", "corpus/nutrition_advisor.ml0",
                    "--include", "Person", "-o", str(static))
        assert r.returncode == 0, r.stderr
        r = psm_cli("fit", str(static), str(pipeline["trace"]), "-o", str(bundle))
        assert r.returncode == 0, r.stderr
        assert "NutritionAdvisor.advice" not in r.stdout  # external, no node
        q = psm_cli("query", str(bundle), "P(Person.weight > 80)")
        assert q.returncode == 0
        q2 = psm_cli("query", str(bundle), "P(NutritionAdvisor.advice.return > 1)")
        assert q2.returncode == 2  # outside the universe

    def test_empty_universe_is_data_error(self, tmp_path):
        r = psm_cli("analyze", "corpus/nutrition_advisor.ml0",
                    "--include", "Zzz*", "-o", str(tmp_path / "x.json"))
        assert r.returncode == 2
        assert "EmptyUniverse" in r.stderr


class TestExitCodes:
    def test_usage_error_is_1(self):
        r = psm_cli("analyze")  # missing arguments
        assert r.returncode == 1

    def test_data_error_is_2(self, pipeline, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        r = psm_cli("fit", str(pipeline["static"]), str(empty), "-o",
                    str(tmp_path / "b.psm"))
        assert r.returncode == 2
        assert "NoData" in r.stderr

    def test_json_errors_single_line(self, pipeline, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        r = psm_cli("--json", "fit", str(pipeline["static"]), str(empty), "-o",
                    str(tmp_path / "b.psm"))
        assert r.returncode == 2
        lines = [l for l in r.stderr.splitlines() if l.strip()]
        parsed = json.loads(lines[-1])
        assert parsed["error"] and parsed["message"]

    def test_unknown_node_is_2(self, pipeline):
        r = psm_cli("query", str(pipeline["bundle"]), "P(Nope.x > 1)")
        assert r.returncode == 2

    def test_bad_query_syntax_is_2(self, pipeline):
        r = psm_cli("query", str(pipeline["bundle"]), "P(Person.weight >)")
        assert r.returncode == 2


class TestDeterminism:
    def test_pipeline_byte_identical(self, tmp_path):
        outputs = []
        for attempt in ("a", "b"):
            root = tmp_path / attempt
            root.mkdir()
            static = root / "static.json"
            trace = root / "trace.jsonl"
            bundle = root / "bundle.psm"
            assert psm_cli("analyze", "corpus/nutrition_advisor.ml0", "-o", str(static)).returncode == 0
            assert psm_cli("run", "corpus/nutrition_advisor.ml0", "--seed", "11",
                           "--iterations", "600", "-o", str(trace)).returncode == 0
            assert psm_cli("fit", str(static), str(trace), "-o", str(bundle)).returncode == 0
            q = psm_cli("query", str(bundle), "SAMPLE(Person, n=5, seed=1)")
            assert q.returncode == 0
            outputs.append((
                static.read_bytes(), trace.read_bytes(), bundle.read_bytes(), q.stdout,
            ))
        assert outputs[0][0] == outputs[1][0]
        assert outputs[0][1] == outputs[1][1]
        assert outputs[0][2] == outputs[1][2]
        assert outputs[0][3] == outputs[1][3]
