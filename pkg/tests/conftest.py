"""Shared fixtures: the corpus program traced and fitted at two scales.

The small network (2000 iterations) backs most behavioral tests; the
large one (10000 iterations) backs the acceptance suite.  Both are
session-scoped because fitting dominates suite runtime.
"""

from __future__ import annotations

import time

import pytest

from psm import structure
from psm.bundle import sha256_text
from psm.density import FitConfig
from psm.minilang import execute, parse
from psm.network import build, fit_all
from psm.trace import assemble

CORPUS_SEED = 11
FIT_SEED = 0
SMALL_ITERATIONS = 2000
BIG_ITERATIONS = 10_000


@pytest.fixture(scope="session")
def corpus_source() -> str:
    with open("corpus/nutrition_advisor.ml0", encoding="utf-8") as fh:
        return fh.read()


@pytest.fixture(scope="session")
def corpus_program(corpus_source):
    return parse(corpus_source)


@pytest.fixture(scope="session")
def corpus_static(corpus_program, corpus_source):
    model = structure.extract(corpus_program)
    model.source_sha256 = sha256_text(corpus_source)
    return model


@pytest.fixture(scope="session")
def corpus_trace(corpus_program):
    return execute(corpus_program, seed=CORPUS_SEED, iterations=SMALL_ITERATIONS)


@pytest.fixture(scope="session")
def corpus_rows(corpus_trace, corpus_static):
    rows, stats = assemble(corpus_trace, corpus_static)
    return rows


@pytest.fixture(scope="session")
def corpus_network(corpus_static, corpus_rows):
    network = build(corpus_static)
    fit_all(network, corpus_rows, FitConfig(seed=FIT_SEED))
    return network


@pytest.fixture(scope="session")
def big_trace(corpus_program):
    return execute(corpus_program, seed=CORPUS_SEED, iterations=BIG_ITERATIONS)


@pytest.fixture(scope="session")
def big_rows(big_trace, corpus_static):
    rows, stats = assemble(big_trace, corpus_static)
    return rows


@pytest.fixture(scope="session")
def big_network(corpus_static, big_rows):
    network = build(corpus_static)
    started = time.perf_counter()
    fit_all(network, big_rows, FitConfig(seed=FIT_SEED))
    network.fit_seconds = time.perf_counter() - started
    return network


@pytest.fixture(scope="session")
def v2_source() -> str:
    with open("corpus/nutrition_advisor_v2.ml0", encoding="utf-8") as fh:
        return fh.read()


@pytest.fixture(scope="session")
def v2_network(v2_source):
    program = parse(v2_source)
    static = structure.extract(program)
    static.source_sha256 = sha256_text(v2_source)
    log = execute(program, seed=CORPUS_SEED, iterations=4000)
    rows, _ = assemble(log, static)
    network = build(static)
    fit_all(network, rows, FitConfig(seed=FIT_SEED))
    return network
