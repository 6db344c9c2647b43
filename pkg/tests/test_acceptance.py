"""Acceptance suite: one test per criterion, at its stated tolerance.

Each test prints a single line with the measured quantities so a run
with -s (or the captured output of a failure) shows exactly what was
achieved.  All tolerances are pinned here, not configurable.

Run with:  pytest tests/test_acceptance.py -v -s
"""

from __future__ import annotations

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import lognorm

from psm import structure
from psm.apps import AnomalyConfig, check, compare, emit_ml0, generate_tests, simulate
from psm.density import FitConfig, Interval, Variable, fit as fit_density, quantile_score
from psm.inference import parse_query, run as run_query
from psm.minilang import execute, parse
from psm.network import build, fit_all
from psm.trace import assemble

GENERATOR_LOG_MEAN = math.log(70.0)
GENERATOR_LOG_STD = 0.15


def _report(criterion: str, passed: bool, detail: str) -> None:
    print(f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} - {detail}")


def _js_bits(p: np.ndarray, q: np.ndarray) -> float:
    p = p / p.sum()
    q = q / q.sum()
    m = 0.5 * (p + q)

    def kl(a, b):
        mask = a > 0
        return float(np.sum(a[mask] * np.log2(a[mask] / b[mask])))

    return 0.5 * kl(p, m) + 0.5 * kl(q, m)


class TestCriterion1FitQuality:
    def test_fitted_weight_marginal_matches_trace_and_generator(self, big_rows):
        person_rows = big_rows["Person"]
        assert len(person_rows) == 10_000
        started = time.perf_counter()
        density = fit_density(
            [Variable("height", "float"), Variable("weight", "float")],
            person_rows,
            FitConfig(seed=0),
        )
        fit_seconds = time.perf_counter() - started

        weights = np.array([r["weight"] for r in person_rows])
        edges = np.linspace(weights.min(), weights.max(), 257)
        trace_hist, _ = np.histogram(weights, bins=edges)
        fitted = np.array([
            density.interval_probability("weight", Interval(edges[i], edges[i + 1]))
            for i in range(256)
        ])
        generator = np.array([
            lognorm.cdf(edges[i + 1], s=GENERATOR_LOG_STD, scale=70.0)
            - lognorm.cdf(edges[i], s=GENERATOR_LOG_STD, scale=70.0)
            for i in range(256)
        ])
        js_trace = _js_bits(fitted, trace_hist.astype(float))
        js_generator = _js_bits(fitted, generator)
        detail = (
            f"js_vs_trace={js_trace:.4f} (<0.05), "
            f"js_vs_generator={js_generator:.4f} (<0.08), "
            f"person_fit={fit_seconds:.1f}s (<60s), rows=10000"
        )
        ok = js_trace < 0.05 and js_generator < 0.08 and fit_seconds < 60.0
        _report("1 fit-quality", ok, detail)
        assert js_trace < 0.05
        assert js_generator < 0.08
        assert fit_seconds < 60.0


FIXED_INPUT_SOURCE = """
class Person { height: float; weight: float; }
class BmiService {
    fun bmi(height: float, weight: float): float {
        let meters: float = height / 100.0;
        return weight / (meters * meters);
    }
}
class NutritionAdvisor {
    bmiService: BmiService;
    fun advice(person: Person): string {
        let h: float = person.height;
        let w: float = person.weight;
        let b: float = this.bmiService.bmi(h, w);
        if (b < 18.5) { return "underweight"; }
        if (b < 25.0) { return "normal"; }
        if (b < 30.0) { return "overweight"; }
        return "obese";
    }
    fun main(): void {
        this.bmiService = new BmiService();
        let p: Person = new Person();
        p.height = 168.59;
        p.weight = 69.54;
        let a: string = this.advice(p);
    }
}
entry NutritionAdvisor.main;
"""


class TestCriterion2BmiEndToEnd:
    def test_traced_bmi_return(self):
        log = execute(parse(FIXED_INPUT_SOURCE), seed=0, iterations=1)
        ret = next(
            e.ret for e in log.events if e.kind == "exit" and e.exec_id == "BmiService.bmi"
        )
        ok = abs(ret - 24.466) <= 1e-3
        _report("2a bmi-trace", ok, f"bmi(168.59, 69.54)={ret:.6f} (24.466 +/- 0.001)")
        assert ret == pytest.approx(24.466, abs=1e-3)

    def test_simulation_concentrates_bmi(self, big_network, corpus_static):
        summary = simulate(
            big_network, corpus_static, "NutritionAdvisor.advice", 4000, seed=1,
            overrides={"param.Person.height": 168.59, "param.Person.weight": 69.54},
        )
        mean = summary.per_node["BmiService.bmi"]["return"]["mean"]
        ok = abs(mean - 24.466) <= 0.5
        _report("2b bmi-simulation", ok, f"simulated bmi mean={mean:.3f} (24.466 +/- 0.5)")
        assert mean == pytest.approx(24.466, abs=0.5)


class TestCriterion3QueryParity:
    def test_tail_probability_matches_trace(self, big_network, big_rows):
        result = run_query(big_network, parse_query("P(Person.weight > 80.0)"))
        p = result.payload["probability"]
        frac = float(np.mean([r["weight"] > 80.0 for r in big_rows["Person"]]))
        ok = abs(p - frac) <= 0.02
        _report("3a tail-probability", ok, f"P(weight>80)={p:.4f}, trace fraction={frac:.4f} (+/-0.02)")
        assert p == pytest.approx(frac, abs=0.02)

    def test_conditional_mean_matches_rejection_oracle(self, big_network):
        density = big_network.nodes["Person"].density
        # oracle: rejection-sample the unconditioned fit until 10^4 accepted
        from psm.minilang.rng import SplitRng

        rng = SplitRng(99, 1)
        accepted: list[float] = []
        while len(accepted) < 10_000:
            for row in density.sample(rng, 50_000):
                if 169.0 < row["height"] < 170.0:
                    accepted.append(row["weight"])
        oracle = float(np.mean(accepted[:10_000]))
        result = run_query(
            big_network,
            parse_query("DIST(Person.weight | 169.0 < Person.height < 170.0)"),
        )
        mean = result.payload["distributions"]["weight"]["mean"]
        ok = abs(mean - oracle) <= 0.02 * abs(oracle)
        _report(
            "3b conditional-mean", ok,
            f"analytic={mean:.3f}, rejection oracle={oracle:.3f} (+/-2%)",
        )
        assert mean == pytest.approx(oracle, rel=0.02)


class TestCriterion4EstimatorSuite:
    def test_estimator_correctness(self):
        rng = np.random.default_rng(17)
        datasets = {
            "degenerate": np.full(300, 2.5),
            "single_point": np.array([1.0] * 299 + [1.0]),
            "bimodal": np.concatenate([rng.normal(-3, 0.5, 400), rng.normal(3, 0.5, 400)]),
        }
        config = FitConfig(seed=5, kmax=4, restarts=2, max_iter=120)
        monotone = True
        within_budget = True
        for name, data in datasets.items():
            d = fit_density([Variable("v", "float")], [{"v": float(x)} for x in data], config)
            hist = d.meta.ll_history
            for prev, cur in zip(hist, hist[1:]):
                if cur < prev - 1e-9 * abs(prev):
                    monotone = False
            if len(hist) > config.max_iter:
                within_budget = False

        gauss = fit_density(
            [Variable("v", "float")],
            [{"v": float(x)} for x in rng.normal(4.0, 2.0, 2000)],
            FitConfig(seed=5, kmax=2),
        )
        total, _ = quad(lambda x: math.exp(gauss.log_density({"v": x})), 4 - 16, 4 + 16, limit=300)
        normalized = abs(total - 1.0) <= 1e-3

        values = rng.choice(["a", "b", "c"], size=400, p=[0.6, 0.3, 0.1])
        counts = {v: int((values == v).sum()) for v in "abc"}
        cat = fit_density([Variable("c", "string")], [{"c": str(v)} for v in values], FitConfig(alpha=1.0))
        denom = 400 + 1.0 * (len(counts) + 1)
        exact = all(cat.probs[(v,)] == (c + 1.0) / denom for v, c in counts.items())

        ok = monotone and within_budget and normalized and exact
        _report(
            "4 estimator-suite", ok,
            f"monotone={monotone}, budget={within_budget}, "
            f"quadrature={total:.6f} (1 +/- 1e-3), categorical_exact={exact}",
        )
        assert monotone and within_budget and normalized and exact


class TestCriterion5Anomaly:
    def test_invalid_weight_detected_and_ripples(self, big_network, corpus_static):
        bad = check(big_network, AnomalyConfig(threshold=0.1), "Person", {"weight": -10.0})
        weight_mode = big_network.nodes["Person"].density.marginal(("weight",)).mode_row()
        good = check(big_network, AnomalyConfig(threshold=0.1), "Person", weight_mode)

        with open("corpus/nutrition_advisor_anomaly.ml0", encoding="utf-8") as fh:
            live = execute(parse(fh.read()), seed=3, iterations=1)
        traced = check(
            big_network, AnomalyConfig(threshold=0.1), "Person", {"weight": -10.0},
            trace=live, static=corpus_static,
        )
        ripple_nodes = [p.node for p in traced.ripple]
        ok = (
            bad.detected and bad.score < 0.001
            and not good.detected and good.score >= 0.95
            and traced.ripple_distance == 1
            and ripple_nodes[0] == "NutritionAdvisor.advice"
            and "BmiService.bmi" in ripple_nodes
        )
        _report(
            "5 anomaly-detection", ok,
            f"score(-10)={bad.score:.5f} (<0.001) detected={bad.detected}, "
            f"score(mode)={good.score:.3f} (>=0.95) detected={good.detected}, "
            f"ripple_distance={traced.ripple_distance} (=1), path={ripple_nodes}",
        )
        assert bad.detected and bad.score < 0.001
        assert not good.detected
        assert traced.ripple_distance == 1
        assert "BmiService.bmi" in ripple_nodes


class TestCriterion6TestGeneration:
    def test_rare_suite(self, big_network, corpus_static, big_rows, corpus_source):
        suite = generate_tests(
            big_network, corpus_static, "NutritionAdvisor.advice", "rare", 50, seed=12,
        )
        person = big_network.nodes["Person"].density
        rescored = [
            quantile_score(
                person,
                {
                    "height": c.args["param.Person.height"],
                    "weight": c.args["param.Person.weight"],
                },
                m=8192,
            )
            for c in suite.cases
        ]
        in_range = [0.02 < s < 0.1 for s in rescored]

        driver = emit_ml0(suite, corpus_static, corpus_source)
        log = execute(parse(driver), seed=0, iterations=1)
        no_aborts = not any(e.kind == "abort" for e in log.events)

        impossible = generate_tests(
            big_network, corpus_static, "NutritionAdvisor.advice", "impossible", 50, seed=12,
        )
        heights = [r["height"] for r in big_rows["Person"]]
        weights = [r["weight"] for r in big_rows["Person"]]
        box = (min(heights), max(heights), min(weights), max(weights))
        outside = [
            not (
                box[0] <= c.args["param.Person.height"] <= box[1]
                and box[2] <= c.args["param.Person.weight"] <= box[3]
            )
            for c in impossible.cases
        ]
        ok = all(in_range) and no_aborts and all(outside) and len(suite.cases) == 50
        _report(
            "6 test-generation", ok,
            f"rare 50/50 rescored in (0.02,0.1): {sum(in_range)}/50 "
            f"[{min(rescored):.3f}, {max(rescored):.3f}], drivers_clean={no_aborts}, "
            f"impossible outside bbox: {sum(outside)}/{len(outside)}",
        )
        assert len(suite.cases) == 50
        assert all(in_range)
        assert no_aborts
        assert all(outside)


class TestCriterion7IntegrityDiff:
    def test_self_and_shifted_diff(self, big_network, v2_network):
        self_report = compare(big_network, big_network, "integrity")
        self_bits = [
            e["divergence_bits"] for e in self_report.entries
            if e["divergence_bits"] is not None
        ]
        self_ok = all(b < 0.01 for b in self_bits)

        report = compare(big_network, v2_network, "integrity")
        person = next(e for e in report.entries if e["node"] == "Person")
        ranked = [e for e in report.entries if e["divergence_bits"] is not None]
        weight_carriers = {
            "Person", "Person.weight", "BmiService.bmi",
            "NutritionAdvisor.advice", "NutritionAdvisor.main",
        }
        top = ranked[0]
        type_top = next(e for e in ranked if e["kind"] == "type")
        ok = (
            self_ok
            and person["divergence_bits"] > 0.2
            and top["node"] in weight_carriers
            and type_top["node"] == "Person"
        )
        _report(
            "7 integrity-diff", ok,
            f"self_max={max(self_bits):.4f} (<0.01), person={person['divergence_bits']:.3f} "
            f"(>0.2), top={top['node']}@{top['divergence_bits']:.3f} (weight-carrying), "
            f"top_type={type_top['node']}",
        )
        assert self_ok
        assert person["divergence_bits"] > 0.2
        assert top["node"] in weight_carriers
        assert type_top["node"] == "Person"


class TestCriterion8Determinism:
    def test_pipeline_byte_identical(self, tmp_path):
        def run_pipeline(tag: str):
            root = tmp_path / tag
            root.mkdir()
            def cli(*args):
                r = subprocess.run(
                    [sys.executable, "-m", "psm.cli", *args],
                    capture_output=True, text=True,
                )
                assert r.returncode == 0, r.stderr
                return r
            cli("analyze", "corpus/nutrition_advisor.ml0", "-o", str(root / "static.json"))
            cli("run", "corpus/nutrition_advisor.ml0", "--seed", "11",
                "--iterations", "1200", "-o", str(root / "trace.jsonl"))
            cli("fit", str(root / "static.json"), str(root / "trace.jsonl"),
                "-o", str(root / "bundle.psm"))
            q = cli("query", str(root / "bundle.psm"),
                    "DIST(Person.weight | 169.0 < Person.height < 170.0)", "--seed", "5")
            return (
                (root / "static.json").read_bytes(),
                (root / "trace.jsonl").read_bytes(),
                (root / "bundle.psm").read_bytes(),
                q.stdout,
            )

        first = run_pipeline("first")
        second = run_pipeline("second")
        same = [a == b for a, b in zip(first, second)]
        ok = all(same)
        _report(
            "8 determinism", ok,
            f"static={same[0]}, trace={same[1]}, bundle={same[2]}, query={same[3]} "
            "(byte-identical over repeated runs)",
        )
        assert ok
