"""Anomaly detection and ripple analysis on the corpus."""

import pytest

from psm.apps import AnomalyConfig, check
from psm.errors import UnfittedNode
from psm.minilang import execute, parse


@pytest.fixture(scope="module")
def anomaly_trace():
    with open("corpus/nutrition_advisor_anomaly.ml0", encoding="utf-8") as fh:
        program = parse(fh.read())
    return execute(program, seed=2, iterations=1)


class TestCheck:
    def test_invalid_weight_detected(self, corpus_network):
        report = check(corpus_network, AnomalyConfig(), "Person", {"weight": -10.0})
        assert report.detected
        assert report.score < 0.001

    def test_mode_value_not_detected(self, corpus_network):
        weight_marginal = corpus_network.nodes["Person"].density.marginal(("weight",))
        mode = weight_marginal.mode_row()["weight"]
        report = check(corpus_network, AnomalyConfig(), "Person", {"weight": mode})
        assert not report.detected
        assert report.score >= 0.95

    def test_threshold_monotonicity(self, corpus_network):
        # lowering tau never turns a non-detection into a detection
        values = [-10.0, 40.0, 55.0, 70.0, 90.0]
        taus = [0.3, 0.1, 0.05, 0.01]
        for value in values:
            detected = [
                check(corpus_network, AnomalyConfig(threshold=t), "Person", {"weight": value}).detected
                for t in taus
            ]
            for wider, narrower in zip(detected, detected[1:]):
                assert wider or not narrower

    def test_invalid_threshold(self):
        with pytest.raises(ValueError):
            AnomalyConfig(threshold=0.0)

    def test_unfitted_node_rejected(self, corpus_static, corpus_rows):
        from psm.density import FitConfig
        from psm.network import build, fit_all

        net = build(corpus_static)
        rows = dict(corpus_rows)
        rows["Person"] = []
        fit_all(net, rows, FitConfig())
        with pytest.raises(UnfittedNode):
            check(net, AnomalyConfig(), "Person", {"weight": -10.0})


class TestRipple:
    def test_injected_weight_ripples_to_bmi(self, corpus_network, corpus_static, anomaly_trace):
        report = check(
            corpus_network, AnomalyConfig(), "Person", {"weight": -10.0},
            trace=anomaly_trace, static=corpus_static,
        )
        assert report.traced
        nodes = [p.node for p in report.ripple]
        assert nodes[0] == "NutritionAdvisor.advice"
        assert "BmiService.bmi" in nodes
        # advice is one call below the frame that wrote the bad value
        assert report.ripple_distance == 1
        assert all(p.score < 0.1 for p in report.ripple)

    def test_normal_value_not_perceived(self, corpus_network, corpus_static, corpus_program):
        trace = execute(corpus_program, seed=77, iterations=1)
        weight = next(
            e.value for e in trace.events if e.kind == "write" and e.prop_id == "Person.weight"
        )
        report = check(
            corpus_network, AnomalyConfig(threshold=0.01), "Person", {"weight": weight},
            trace=trace, static=corpus_static,
        )
        assert report.traced
        assert report.ripple_distance is None  # never perceived
        assert report.to_dict()["perceived"] is False

    def test_origin_not_in_trace(self, corpus_network, corpus_static, anomaly_trace):
        report = check(
            corpus_network, AnomalyConfig(), "Person", {"weight": -123.0},
            trace=anomaly_trace, static=corpus_static,
        )
        assert report.ripple == []
        assert report.ripple_distance is None

    def test_scope_limits_ripple(self, corpus_network, corpus_static, anomaly_trace):
        report = check(
            corpus_network, AnomalyConfig(scope=("BmiService.bmi",)),
            "Person", {"weight": -10.0},
            trace=anomaly_trace, static=corpus_static,
        )
        assert [p.node for p in report.ripple] == ["BmiService.bmi"]
        assert report.ripple_distance == 2  # bmi is two frames below main

    def test_report_serializes(self, corpus_network, corpus_static, anomaly_trace):
        report = check(
            corpus_network, AnomalyConfig(), "Person", {"weight": -10.0},
            trace=anomaly_trace, static=corpus_static,
        )
        d = report.to_dict()
        assert d["detected"] and d["ripple_distance"] == 1
        assert all({"node", "frame", "depth", "score", "detected"} <= set(p) for p in d["ripple"])
