"""Record real API responses as fixtures for the explorer's tests.

Builds the corpus bundle (10^4 iterations, the acceptance-scale fit),
serves it in process, captures the canned responses the UI tests
replay, and computes the rejection-sampling oracle for the conditional
mean so the parity test can compare rendered numbers against it.

Run from the repository root:  python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import json
import pathlib
import sys

import numpy as np
from fastapi.testclient import TestClient

sys.path.insert(0, "src")

from psm import structure
from psm.bundle import ModelBundle, save_bundle, sha256_text
from psm.density import FitConfig
from psm.minilang import execute, parse
from psm.minilang.rng import SplitRng
from psm.network import build, fit_all
from psm.server import create_app
from psm.trace import assemble, dumps_log

OUT = pathlib.Path("frontend/fixtures")
SEED = 11
ITERATIONS = 10_000


def main() -> None:
    source = open("corpus/nutrition_advisor.ml0", encoding="utf-8").read()
    program = parse(source)
    static = structure.extract(program)
    static.source_sha256 = sha256_text(source)
    log = execute(program, seed=SEED, iterations=ITERATIONS)
    rows, _ = assemble(log, static)
    network = build(static)
    report = fit_all(network, rows, FitConfig(seed=0))
    bundle = ModelBundle(
        static=static, network=network, fit_report=report.to_dict(),
        provenance={"seed": SEED}, source=source,
    )
    OUT.mkdir(parents=True, exist_ok=True)
    save_bundle(bundle, OUT / "bundle.psm")

    app = create_app(bundle, server_seed=0)
    client = TestClient(app)

    def dump(name: str, payload) -> None:
        with open(OUT / name, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    dump("network.json", client.get("/api/network").json())
    dump("node_person.json", client.get("/api/node/Person").json())
    dump(
        "query_tail.json",
        client.post("/api/query", json={"text": "P(Person.weight > 80.0)", "seed": 5}).json(),
    )
    dump(
        "query_conditional.json",
        client.post(
            "/api/query",
            json={
                "text": "DIST(Person.weight | 169.0 < Person.height < 170.0)",
                "seed": 5,
            },
        ).json(),
    )
    dump(
        "query_sample.json",
        client.post("/api/query", json={"text": "SAMPLE(Person, n=5, seed=5)"}).json(),
    )

    anomaly_source = open("corpus/nutrition_advisor_anomaly.ml0", encoding="utf-8").read()
    live = execute(parse(anomaly_source), seed=3, iterations=1)
    dump(
        "anomaly_ripple.json",
        client.post(
            "/api/anomaly",
            json={
                "node": "Person",
                "values": {"weight": -10.0},
                "tau": 0.1,
                "trace": dumps_log(live),
            },
        ).json(),
    )
    dump(
        "anomaly_mode.json",
        client.post(
            "/api/anomaly",
            json={
                "node": "Person",
                "values": network.nodes["Person"].density.marginal(("weight",)).mode_row(),
                "tau": 0.1,
            },
        ).json(),
    )

    # rejection-sampling oracle for the conditional-mean parity check
    density = network.nodes["Person"].density
    rng = SplitRng(99, 1)
    accepted: list[float] = []
    while len(accepted) < 10_000:
        for row in density.sample(rng, 50_000):
            if 169.0 < row["height"] < 170.0:
                accepted.append(row["weight"])
    oracle = float(np.mean(accepted[:10_000]))
    trace_fraction = float(np.mean([r["weight"] > 80.0 for r in rows["Person"]]))
    dump(
        "meta.json",
        {
            "conditional_mean_oracle": oracle,
            "trace_fraction_weight_gt_80": trace_fraction,
            "iterations": ITERATIONS,
            "seed": SEED,
        },
    )
    print(f"fixtures written to {OUT}/ (oracle mean {oracle:.3f})")


if __name__ == "__main__":
    main()
