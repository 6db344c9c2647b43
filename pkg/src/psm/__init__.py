"""Probabilistic software modeling workbench.

Pipeline: parse and run ML0 programs to collect traces, extract the
static structure, mirror it as a network of probabilistic models, fit
the models from trace observations, then query, detect anomalies,
generate tests, simulate, and diff.
"""

__version__ = "0.1.0"
