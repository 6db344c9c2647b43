"""Read-only HTTP API over a loaded model bundle.

Every response carries the bundle's content hash and the RNG seed that
produced it.  Requests that do not supply a seed get one derived from
(server seed, request counter), exposed in the response metadata so any
result can be reproduced through the CLI.
"""

from __future__ import annotations

import itertools
import math

from fastapi import FastAPI, HTTPException, Query as QueryParam, Request
from fastapi.responses import JSONResponse

from psm.apps import AnomalyConfig, check, compare, simulate
from psm.bundle import ModelBundle, load_bundle
from psm.density.base import Interval
from psm.errors import (
    PsmError,
    UnfittedNode,
    UnknownNode,
    UnknownVariable,
    ZeroProbabilityCondition,
)
from psm.inference import fitted_curve, parse_query, run as run_query
from psm.inference.query import KINDS, Query
from psm.minilang.rng import stream_id
from psm.trace import loads_log


def _constraint_from_json(spec) -> object:
    if isinstance(spec, dict):
        if "point" in spec:
            return spec["point"]
        lo = spec.get("lo", -math.inf)
        hi = spec.get("hi", math.inf)
        return Interval(float(lo), float(hi))
    return spec  # bare scalar = point constraint


def create_app(bundle: ModelBundle, server_seed: int = 0) -> FastAPI:
    app = FastAPI(title="psm-explorer-api", version="1")
    counter = itertools.count(1)
    network = bundle.network

    def meta(seed_used: int) -> dict:
        return {
            "bundle": bundle.content_hash,
            "server_seed": server_seed,
            "seed_used": seed_used,
        }

    @app.exception_handler(PsmError)
    async def psm_error_handler(request: Request, exc: PsmError):
        status = 400
        if isinstance(exc, (UnknownNode, UnknownVariable)):
            status = 404
        elif isinstance(exc, UnfittedNode):
            status = 409
        elif isinstance(exc, ZeroProbabilityCondition):
            status = 422
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "message": str(exc)},
        )

    @app.get("/api/network")
    def get_network():
        nodes = []
        for node_id, node in sorted(network.nodes.items()):
            nodes.append({
                "id": node_id,
                "kind": node.kind,
                "variables": [{"name": v.name, "kind": v.kind} for v in node.variables],
                "fitted": node.density is not None,
                "family": node.fit_info.get("family"),
                "sample_count": node.sample_count,
                "low_confidence": node.low_confidence,
            })
        edges = [
            {"src": e.src, "dst": e.dst, "kind": e.kind, "site": e.site, "latent": e.latent}
            for e in network.edges
        ]
        return {
            "nodes": nodes,
            "edges": edges,
            "fit_report": bundle.fit_report,
            "provenance": bundle.provenance,
            "meta": meta(server_seed),
        }

    @app.get("/api/node/{node_id}")
    def get_node(node_id: str):
        node = network.node(node_id)
        variables = {}
        for v in node.variables:
            variables[v.name] = fitted_curve(node, v.name)
        return {
            "id": node.id,
            "kind": node.kind,
            "fitted": node.density is not None,
            "family": node.fit_info.get("family"),
            "sample_count": node.sample_count,
            "low_confidence": node.low_confidence,
            "variables": [{"name": v.name, "kind": v.kind} for v in node.variables],
            "curves": variables,
            "meta": meta(server_seed),
        }

    @app.post("/api/query")
    def post_query(body: dict):
        seed_used = body.get("seed")
        if seed_used is None:
            seed_used = stream_id("request", server_seed, next(counter)) % (1 << 31)
        try:
            if "text" in body:
                q = parse_query(body["text"])
            else:
                kind = body["kind"]
                if kind not in KINDS:
                    raise ValueError(f"unknown query kind {kind!r}")
                q = Query(
                    kind=kind,
                    targets=list(body.get("targets", [])),
                    n=int(body.get("n", 0)),
                )
                if body.get("target_interval"):
                    ref, spec = body["target_interval"]
                    iv = _constraint_from_json(spec)
                    if not isinstance(iv, Interval):
                        iv = Interval(float(iv), float(iv), lo_strict=False, hi_strict=False)
                    q.target_interval = (ref, iv)
                for ref, spec in body.get("constraints", {}).items():
                    q.constraints[ref] = _constraint_from_json(spec)
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=f"malformed query: {exc}")
        q.seed = int(seed_used)
        q.allow_low_confidence = bool(body.get("allow_low_confidence", False))
        result = run_query(network, q)
        payload = result.to_dict()
        payload["meta"] = meta(q.seed)
        return payload

    @app.post("/api/anomaly")
    def post_anomaly(body: dict):
        try:
            node_id = body["node"]
            values = body["values"]
            tau = float(body.get("tau", 0.1))
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=f"malformed request: {exc}")
        live = loads_log(body["trace"]) if body.get("trace") else None
        report = check(
            network, AnomalyConfig(threshold=tau), node_id, values,
            trace=live, static=bundle.static,
        )
        payload = report.to_dict()
        payload["meta"] = meta(server_seed)
        return payload

    @app.post("/api/simulate")
    def post_simulate(body: dict):
        try:
            entry = body["entry"]
            runs = int(body.get("n", 1000))
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=f"malformed request: {exc}")
        seed_used = body.get("seed")
        if seed_used is None:
            seed_used = stream_id("request", server_seed, next(counter)) % (1 << 31)
        overrides = {
            name: _constraint_from_json(spec)
            for name, spec in body.get("overrides", {}).items()
        }
        summary = simulate(
            network, bundle.static, entry, runs, seed=int(seed_used),
            overrides=overrides or None,
        )
        payload = summary.to_dict(include_rows=bool(body.get("include_rows", False)))
        payload["meta"] = meta(int(seed_used))
        return payload

    @app.get("/api/compare")
    def get_compare(
        other: str = QueryParam(..., description="path to the other bundle"),
        mode: str = QueryParam("integrity"),
    ):
        other_bundle = load_bundle(other)
        report = compare(
            network, other_bundle.network, mode,
            static_a=bundle.static, static_b=other_bundle.static,
        )
        payload = report.to_dict()
        payload["other"] = other_bundle.content_hash
        payload["meta"] = meta(server_seed)
        return payload

    return app
