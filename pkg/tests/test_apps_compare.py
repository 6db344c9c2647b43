"""Integrity and compatibility diffing."""

import pytest

from psm.apps import compare
from psm.density import FitConfig
from psm.errors import NoOverlap
from psm.minilang import execute, parse
from psm import structure
from psm.network import build, fit_all
from psm.trace import assemble


def _fit_source(source: str, iterations: int = 2000, seed: int = 11):
    program = parse(source)
    static = structure.extract(program)
    log = execute(program, seed=seed, iterations=iterations)
    rows, _ = assemble(log, static)
    net = build(static)
    fit_all(net, rows, FitConfig(seed=0))
    return static, net


class TestIntegrity:
    def test_network_vs_itself_all_compatible(self, corpus_network):
        report = compare(corpus_network, corpus_network, "integrity")
        assert report.added == [] and report.removed == []
        for entry in report.entries:
            if entry["divergence_bits"] is not None:
                assert entry["divergence_bits"] < 0.01
                assert entry["verdict"] == "compatible"

    def test_shifted_weight_flagged_and_top_ranked(self, corpus_network, v2_network):
        report = compare(corpus_network, v2_network, "integrity")
        person = next(e for e in report.entries if e["node"] == "Person")
        assert person["divergence_bits"] > 0.2
        assert person["verdict"] == "divergent"
        ranked = [e for e in report.entries if e["divergence_bits"] is not None]
        assert ranked[0]["divergence_bits"] == max(e["divergence_bits"] for e in ranked)
        # the top rank is caused by the shifted weight: every node that
        # carries weight-derived variables outranks every node that does not
        weight_carriers = {
            "Person", "Person.weight", "BmiService.bmi",
            "NutritionAdvisor.advice", "NutritionAdvisor.main",
        }
        assert ranked[0]["node"] in weight_carriers
        bits_by_node = {e["node"]: e["divergence_bits"] for e in ranked}
        assert bits_by_node["Person.height"] < 0.05
        # among type nodes, the shifted Person tops the ranking
        type_nodes = [e for e in ranked if e["kind"] == "type"]
        assert type_nodes[0]["node"] == "Person"

    def test_added_removed_nodes(self, corpus_network):
        source = """
class Person { height: float; weight: float; }
class Main {
    fun main(): void {
        let p: Person = new Person();
        p.height = normal(170.0, 10.0);
        p.weight = lognormal(4.248495242049359, 0.15);
    }
}
entry Main.main;
"""
        _, other = _fit_source(source, iterations=500)
        report = compare(corpus_network, other, "integrity")
        assert "Main.main" in report.added
        assert "NutritionAdvisor.advice" in report.removed
        person = next(e for e in report.entries if e["node"] == "Person")
        assert person["divergence_bits"] < 0.05

    def test_no_overlap(self, corpus_network):
        source = "class Zed { fun main(): void { let i: int = 1; } }\nentry Zed.main;"
        _, other = _fit_source(source, iterations=40)
        with pytest.raises(NoOverlap):
            compare(corpus_network, other, "integrity")


METERS_SOURCE = """
class Site { height: float; }
class Sensor {
    fun report(h: float): float {
        return h * 1.0;
    }
}
class Main {
    fun main(): void {
        let s: Sensor = new Sensor();
        let site: Site = new Site();
        site.height = normal(1.7, 0.1);
        let echoed: float = s.report(site.height);
    }
}
entry Main.main;
"""

CENTIMETERS_SOURCE = METERS_SOURCE.replace("normal(1.7, 0.1)", "normal(170.0, 10.0)")


class TestCompatibility:
    def test_self_compatibility_compatible(self, corpus_network, corpus_static):
        report = compare(
            corpus_network, corpus_network, "compatibility",
            static_a=corpus_static, static_b=corpus_static,
        )
        pair = next(
            e for e in report.entries
            if e["caller"] == "NutritionAdvisor.advice" and e["callee"] == "BmiService.bmi"
        )
        assert pair["divergence_bits"] < 0.05
        assert pair["verdict"] == "compatible"

    def test_unit_mismatch_near_one_bit(self):
        static_m, net_m = _fit_source(METERS_SOURCE)
        static_c, net_c = _fit_source(CENTIMETERS_SOURCE)
        report = compare(
            net_m, net_c, "compatibility", static_a=static_m, static_b=static_c,
        )
        pair = next(e for e in report.entries if e["callee"] == "Sensor.report")
        assert pair["divergence_bits"] == pytest.approx(1.0, abs=0.05)
        assert pair["verdict"] == "divergent"

    def test_compatibility_requires_static(self, corpus_network):
        with pytest.raises(NoOverlap):
            compare(corpus_network, corpus_network, "compatibility")


def test_report_serializes(corpus_network):
    report = compare(corpus_network, corpus_network, "integrity")
    blob = report.to_dict()
    assert blob["mode"] == "integrity"
    assert blob["thresholds"] == {"compatible": 0.05, "warning": 0.2}
    assert all("verdict" in e for e in blob["entries"])
