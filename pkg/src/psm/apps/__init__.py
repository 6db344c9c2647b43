"""Applications on fitted model networks: anomaly detection, test
generation, simulation, and integrity/compatibility diffing."""

from psm.apps.anomaly import AnomalyConfig, AnomalyReport, check
from psm.apps.compare import DiffReport, compare
from psm.apps.gentest import StrataConfig, TestSuite, emit_ml0, generate_tests
from psm.apps.simulate import SimulationSummary, simulate

__all__ = [
    "AnomalyConfig",
    "AnomalyReport",
    "check",
    "StrataConfig",
    "TestSuite",
    "generate_tests",
    "emit_ml0",
    "simulate",
    "SimulationSummary",
    "compare",
    "DiffReport",
]
