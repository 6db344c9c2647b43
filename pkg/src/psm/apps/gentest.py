"""Strata-based test generation from fitted argument models.

Arguments are drawn from the models that supply them: object-valued
parameters from their type node's joint, scalar parameters from the
executable node's own parameter marginal.  Typical and rare cases come
from rejection sampling on the quantile score; impossible cases are
drawn uniformly from the observed support box inflated by three
interquartile ranges per variable and must score below the impossible
bound while lying outside the observed bounding box.  Each case carries
the conditional return distribution given its arguments as the
oracle expectation, and a suite can be emitted as a runnable ML0
driver program.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from psm.density import CategoricalDensity, quantile_score
from psm.density.base import Density
from psm.density.mixture import MixtureDensity
from psm.errors import StratumUnsatisfiable, UnfittedNode, UnknownNode
from psm.minilang.ast import SCALAR_KINDS
from psm.minilang.rng import SplitRng, stream_id
from psm.network import ModelNetwork
from psm.structure import StaticModel, object_param_prefix

ATTEMPT_CAP = 1_000_000
_BATCH = 512


@dataclass
class StrataConfig:
    typical: tuple[float, float] = (0.5, 1.0)
    rare: tuple[float, float] = (0.02, 0.1)
    impossible_bound: float = 0.001
    box_iqr_factor: float = 3.0

    def __post_init__(self):
        strata = {"typical": self.typical, "rare": self.rare,
                  "impossible": (0.0, self.impossible_bound)}
        spans = sorted(strata.values())
        for (a_lo, a_hi), (b_lo, b_hi) in zip(spans, spans[1:]):
            if b_lo < a_hi:
                raise ValueError("strata ranges must be disjoint")

    def range_of(self, stratum: str) -> tuple[float, float]:
        if stratum == "typical":
            return self.typical
        if stratum == "rare":
            return self.rare
        if stratum == "impossible":
            return (0.0, self.impossible_bound)
        raise ValueError(f"unknown stratum {stratum!r}")


@dataclass
class TestCase:
    target: str
    args: dict  # executable-variable name -> value
    stratum: str
    score: float
    expected_return: dict | None = None

    def to_dict(self) -> dict:
        return {
            "target": self.target, "args": self.args, "stratum": self.stratum,
            "score": self.score, "expected_return": self.expected_return,
        }


@dataclass
class TestSuite:
    target: str
    stratum: str
    cases: list[TestCase] = field(default_factory=list)
    requested: int = 0
    attempts: int = 0
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "target": self.target, "stratum": self.stratum,
            "requested": self.requested, "achieved": len(self.cases),
            "attempts": self.attempts, "seed": self.seed,
            "cases": [c.to_dict() for c in self.cases],
        }


@dataclass
class _ArgGroup:
    density: Density
    mapping: dict[str, str]  # group variable -> executable variable name
    source_node: str  # node holding the observation summaries


def argument_groups(network: ModelNetwork, static: StaticModel, exec_id: str) -> list[_ArgGroup]:
    if exec_id not in static.executables:
        raise UnknownNode(f"unknown executable {exec_id!r}")
    info = static.executables[exec_id]
    exec_node = network.node(exec_id)
    groups: list[_ArgGroup] = []
    scalar_vars = [
        (f"param.{name}", f"param.{name}")
        for name, ptype in info.params
        if ptype in SCALAR_KINDS
    ]
    if scalar_vars:
        if exec_node.density is None:
            raise UnfittedNode(f"node {exec_id!r} is not fitted")
        names = tuple(v for v, _ in scalar_vars)
        groups.append(
            _ArgGroup(exec_node.density.marginal(names), dict(scalar_vars), exec_id)
        )
    for name, ptype in info.params:
        if ptype in SCALAR_KINDS:
            continue
        type_node = network.node(ptype)
        if type_node.density is None:
            raise UnfittedNode(f"argument-supplying node {ptype!r} is not fitted")
        if type_node.density.is_empty:
            groups.append(_ArgGroup(type_node.density, {}, ptype))
            continue
        prefix = object_param_prefix(static, info, name, ptype)
        mapping = {
            v.name: f"{prefix}{v.name}" for v in type_node.density.variables
        }
        groups.append(_ArgGroup(type_node.density, mapping, ptype))
    if not groups:
        raise StratumUnsatisfiable(f"{exec_id!r} takes no arguments", 0)
    return groups


def _score_args(groups: list[_ArgGroup], args: dict) -> float:
    """Composite argument score: the joint quantile score per group,
    combined by product (groups are sampled independently)."""
    score = 1.0
    for group in groups:
        if group.density.is_empty:
            continue
        row = {g: args[e] for g, e in group.mapping.items()}
        score *= quantile_score(group.density, row)
    return score


def _sample_args(groups: list[_ArgGroup], rng, n: int) -> list[dict]:
    out = [dict() for _ in range(n)]
    for group in groups:
        if group.density.is_empty:
            continue
        rows = group.density.sample(rng, n)
        for i, row in enumerate(rows):
            for g, e in group.mapping.items():
                out[i][e] = row[g]
    return out


def _expected_return(network: ModelNetwork, exec_id: str, args: dict) -> dict | None:
    node = network.node(exec_id)
    if node.density is None or node.density.is_empty:
        return None
    names = set(node.density.variable_names())
    if "return" not in names:
        return None
    usable = {k: v for k, v in args.items() if k in names}
    try:
        conditioned = node.density.condition(usable) if usable else node.density
        marg = conditioned.marginal(("return",))
    except Exception:
        return None
    var = node.density.var("return")
    if isinstance(marg, CategoricalDensity):
        return {
            "kind": "categorical",
            "values": {str(k): float(v) for k, v in sorted(marg.value_probabilities("return").items(), key=lambda kv: repr(kv[0]))},
        }
    if isinstance(marg, MixtureDensity):
        if var.kind in ("bool", "string"):
            probs = marg.categorical_marginal("return").value_probabilities("return")
            return {
                "kind": "categorical",
                "values": {str(k): float(v) for k, v in sorted(probs.items(), key=lambda kv: repr(kv[0]))},
            }
        return {
            "kind": "continuous",
            "mean": float(marg.mean("return")),
            "std": float(math.sqrt(max(marg.variance("return"), 0.0))),
        }
    return None


def generate_tests(
    network: ModelNetwork,
    static: StaticModel,
    target: str,
    stratum: str,
    count: int,
    seed: int = 0,
    strata: StrataConfig | None = None,
) -> TestSuite:
    strata = strata or StrataConfig()
    lo, hi = strata.range_of(stratum)
    groups = argument_groups(network, static, target)
    suite = TestSuite(target=target, stratum=stratum, requested=count, seed=seed)
    rng = SplitRng(seed, stream_id("gentest", target, stratum))

    # generation uses an inner margin (3 Monte-Carlo standard errors of
    # the score estimator) so independent re-scoring stays in range
    from psm.density.measures import REFERENCE_DRAWS

    def margin(s: float) -> float:
        return 3.0 * math.sqrt(max(s * (1.0 - s), 1e-6) / REFERENCE_DRAWS)

    def accept(score: float) -> bool:
        if stratum == "impossible":
            return score + margin(score) < strata.impossible_bound
        if score - margin(score) <= lo:
            return False
        if hi >= 1.0:  # the closed upper end of "typical" cannot flip
            return score <= hi
        return score + margin(score) < hi

    attempts = 0
    sampler = (
        _impossible_sampler(network, static, target, groups, strata)
        if stratum == "impossible"
        else None
    )
    while len(suite.cases) < count and attempts < ATTEMPT_CAP:
        attempts += _BATCH
        if sampler is not None:
            candidates = sampler(rng, _BATCH)
        else:
            candidates = _sample_args(groups, rng, _BATCH)
        for args in candidates:
            if len(suite.cases) >= count:
                break
            score = _score_args(groups, args)
            if not accept(score):
                continue
            suite.cases.append(
                TestCase(
                    target=target,
                    args=args,
                    stratum=stratum,
                    score=float(score),
                    expected_return=_expected_return(network, target, args),
                )
            )
    suite.attempts = attempts
    if len(suite.cases) < count:
        raise StratumUnsatisfiable(
            f"stratum {stratum!r} for {target!r}: got {len(suite.cases)}/{count} "
            f"after {attempts} attempts",
            achieved=len(suite.cases),
        )
    return suite


def _impossible_sampler(network, static, target, groups, strata):
    """Uniform draws over the observed support box inflated by
    box_iqr_factor interquartile ranges, rejecting anything inside the
    observed bounding box itself."""
    bounds: dict[str, tuple[float, float, float, float]] = {}
    cat_groups: list[_ArgGroup] = []
    for group in groups:
        summaries = network.node(group.source_node).summaries
        has_cat = False
        for gvar, evar in group.mapping.items():
            var = group.density.var(gvar)
            key = gvar if gvar in summaries else evar
            summary = summaries.get(key)
            if var.kind in ("bool", "string") or summary is None or summary.minimum is None:
                has_cat = True
                continue
            iqr = max((summary.q75 or 0.0) - (summary.q25 or 0.0), 1e-9)
            lo = summary.minimum - strata.box_iqr_factor * iqr
            hi = summary.maximum + strata.box_iqr_factor * iqr
            bounds[evar] = (lo, hi, summary.minimum, summary.maximum)
        if has_cat:
            cat_groups.append(group)
    if not bounds:
        raise StratumUnsatisfiable(
            f"no continuous argument variables for {target!r}", 0
        )

    def sampler(rng, n: int) -> list[dict]:
        gen = rng.generator
        cat_rows = _sample_args(cat_groups, rng, n) if cat_groups else [{} for _ in range(n)]
        out = []
        for i in range(n):
            args = {
                e: v for e, v in cat_rows[i].items() if e not in bounds
            }
            inside = True
            for evar, (lo, hi, obs_lo, obs_hi) in bounds.items():
                v = float(gen.uniform(lo, hi))
                args[evar] = v
                if not obs_lo <= v <= obs_hi:
                    inside = False
            if inside:
                continue  # must leave the observed bounding box
            out.append(args)
        return out

    return sampler


# --- ML0 emission ---


def _ml0_literal(value, kind: str) -> str:
    if kind == "bool":
        return "true" if value else "false"
    if kind == "string":
        return '"' + str(value).replace("\\", "\\\\").replace('"', '\\"') + '"'
    if kind == "int":
        v = int(value)
        return f"(0 - {-v})" if v < 0 else str(v)
    v = float(value)
    body = f"{abs(v):.17g}"
    if "e" in body or "E" in body:
        body = f"{abs(v):.17f}"
    if "." not in body:
        body += ".0"
    return f"(0.0 - {body})" if v < 0 else body


def _construction_stmts(static: StaticModel, var: str, type_id: str, seen: set) -> list[str]:
    stmts = [f"let {var}: {type_id} = new {type_id}();"]
    seen = seen | {type_id}
    for prop in static.types[type_id].properties:
        if prop.kind == "object" and prop.ref_type and prop.ref_type not in seen:
            sub = f"{var}_{prop.name}"
            stmts.extend(_construction_stmts(static, sub, prop.ref_type, seen))
            stmts.append(f"{var}.{prop.name} = {sub};")
    return stmts


def emit_ml0(suite: TestSuite, static: StaticModel, source: str) -> str:
    """Render a suite as a runnable ML0 program: the original classes
    plus one driver method per case."""
    info = static.executables.get(suite.target)
    if info is None:
        raise UnknownNode(f"unknown executable {suite.target!r}")
    owner = info.owner
    body_without_entry = re.sub(r"(?m)^\s*entry\s+[\w.]+\s*;\s*$", "", source).rstrip()
    methods: list[str] = []
    for idx, case in enumerate(suite.cases):
        lines: list[str] = []
        lines.extend(f"        {s}" for s in _construction_stmts(static, "target", owner, set()))
        call_args: list[str] = []
        for pname, ptype in info.params:
            if ptype in SCALAR_KINDS:
                value = case.args.get(f"param.{pname}", 0)
                call_args.append(_ml0_literal(value, ptype))
            else:
                prefix = object_param_prefix(static, info, pname, ptype)
                obj_var = f"arg_{pname}"
                lines.extend(f"        {s}" for s in _construction_stmts(static, obj_var, ptype, set()))
                for prop in static.types[ptype].properties:
                    if prop.kind == "object":
                        continue
                    cell = f"{prefix}{prop.name}"
                    if cell in case.args:
                        lines.append(
                            f"        {obj_var}.{prop.name} = "
                            f"{_ml0_literal(case.args[cell], prop.kind)};"
                        )
                call_args.append(obj_var)
        call = f"target.{info.name}({', '.join(call_args)})"
        if info.returns in SCALAR_KINDS or info.returns in static.types:
            ret_type = info.returns
            lines.append(f"        let result: {ret_type} = {call};")
        else:
            lines.append(f"        {call};")
        methods.append(
            f"    fun case{idx}(): void {{\n" + "\n".join(lines) + "\n    }"
        )
    calls = "\n".join(f"        this.case{i}();" for i in range(len(suite.cases)))
    driver = (
        "class GeneratedSuiteDriver {\n"
        + "\n\n".join(methods)
        + "\n\n    fun main(): void {\n"
        + calls
        + "\n    }\n}\n\nentry GeneratedSuiteDriver.main;\n"
    )
    return body_without_entry + "\n\n" + driver
