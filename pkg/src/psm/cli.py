"""Command-line pipeline: analyze, run, fit, query, detect, gentest,
simulate, diff, serve.

Exit codes: 0 success, 1 usage error, 2 data or validation error,
3 internal error.  With --json, errors print as single-line JSON on
stderr.
"""

from __future__ import annotations

import json
import sys

import click

from psm import __version__
from psm.bundle import ModelBundle, load_bundle, save_bundle, sha256_file, sha256_text
from psm.density import FitConfig
from psm.density.base import Interval
from psm.errors import PsmError
from psm.inference import parse_query, run as run_query
from psm.minilang import execute, parse
from psm.network import build, fit_all
from psm import structure, trace as trace_mod
from psm.apps import (
    AnomalyConfig,
    check,
    compare,
    emit_ml0,
    generate_tests,
    simulate,
)


def _echo_json(obj) -> None:
    click.echo(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False))


def _parse_scalar(text: str):
    lowered = text.lower()
    if lowered == "true":
        return True
    if lowered == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _parse_assignment(item: str):
    if "=" not in item:
        raise click.UsageError(f"expected name=value, got {item!r}")
    name, raw = item.split("=", 1)
    if ".." in raw:
        lo_s, hi_s = raw.split("..", 1)
        return name, Interval(float(lo_s), float(hi_s))
    return name, _parse_scalar(raw)


@click.group(name="psm")
@click.version_option(__version__)
@click.option("--json", "json_errors", is_flag=True, help="machine-readable errors on stderr")
@click.pass_context
def cli(ctx, json_errors):
    """Probabilistic software modeling workbench."""
    ctx.ensure_object(dict)
    ctx.obj["json_errors"] = json_errors


@cli.command()
@click.argument("src", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), required=True)
@click.option("--include", multiple=True, default=("*",), show_default=True,
              help="glob patterns selecting the modeling universe")
def analyze(src, output, include):
    """Extract the static model of an ML0 source file."""
    source = open(src, encoding="utf-8").read()
    program = parse(source)
    model = structure.extract(program)
    model = structure.universe_filter(model, list(include))
    model.source_sha256 = sha256_text(source)
    with open(output, "w", encoding="utf-8") as fh:
        fh.write(structure.to_json(model))
    click.echo(f"static model: {len(model.types)} types, "
               f"{len(model.executables)} executables -> {output}")


@cli.command(name="run")
@click.argument("src", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--iterations", type=int, default=1, show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False), required=True)
def run_cmd(src, seed, iterations, output):
    """Execute a program's entry driver and write the trace."""
    source = open(src, encoding="utf-8").read()
    program = parse(source)
    log = execute(program, seed=seed, iterations=iterations)
    trace_mod.write_log(log, output)
    aborts = sum(1 for e in log.events if e.kind == "abort")
    click.echo(f"trace: {len(log.events)} events, {aborts} aborts -> {output}")


@cli.command()
@click.argument("static_json", type=click.Path(exists=True, dir_okay=False))
@click.argument("trace_file", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), required=True)
@click.option("--kmax", type=int, default=8, show_default=True)
@click.option("--tol", type=float, default=1e-6, show_default=True)
@click.option("--min-samples", type=int, default=30, show_default=True)
@click.option("--restarts", type=int, default=3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--src", "src_path", type=click.Path(exists=True, dir_okay=False),
              help="embed the original source (enables test emission)")
@click.option("--timestamp", default=None, help="provenance timestamp (omitted by default)")
def fit(static_json, trace_file, output, kmax, tol, min_samples, restarts, seed, src_path, timestamp):
    """Fit the model network from a static model and a trace."""
    model = structure.from_json(open(static_json, encoding="utf-8").read())
    log = trace_mod.read_log(trace_file)
    if not log.events:
        raise PsmError("NoData: trace contains no events")
    rows, stats = trace_mod.assemble(log, model)
    network = build(model)
    config = FitConfig(kmax=kmax, tol=tol, min_samples=min_samples,
                       restarts=restarts, seed=seed)
    report = fit_all(network, rows, config)
    provenance = {
        "source_sha256": model.source_sha256,
        "trace_sha256": sha256_file(trace_file),
        "seed": seed,
        "fit_config": {
            "kmax": kmax, "tol": tol, "min_samples": min_samples,
            "restarts": restarts,
        },
        "completed_frames": stats.completed_frames,
        "aborted_frames": stats.aborted_frames,
    }
    if timestamp is not None:
        provenance["created"] = timestamp
    source = open(src_path, encoding="utf-8").read() if src_path else None
    bundle = ModelBundle(
        static=model, network=network, fit_report=report.to_dict(),
        provenance=provenance, source=source,
    )
    content_hash = save_bundle(bundle, output)
    click.echo(report.render())
    click.echo(f"bundle {content_hash[:12]} -> {output}")


@cli.command()
@click.argument("bundle_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("query_text")
@click.option("--seed", type=int, default=None, help="override the query seed")
@click.option("--allow-low-confidence", is_flag=True)
@click.option("--plot", "plot_path", type=click.Path(dir_okay=False),
              help="write the first distribution as SVG")
def query(bundle_path, query_text, seed, allow_low_confidence, plot_path):
    """Run a query (see docs/query-language.md) against a bundle."""
    bundle = load_bundle(bundle_path)
    q = parse_query(query_text)
    if seed is not None:
        q.seed = seed
    q.allow_low_confidence = allow_low_confidence
    result = run_query(bundle.network, q)
    payload = result.to_dict()
    payload["provenance"]["bundle"] = bundle.content_hash
    _echo_json(payload)
    if plot_path:
        _write_plot(result, plot_path, q.canonical())


def _write_plot(result, plot_path, title):
    from psm.plot import svg_categorical, svg_histogram

    if result.kind != "distribution":
        raise PsmError("--plot needs a DIST(...) query")
    name, dist = next(iter(result.payload["distributions"].items()))
    if "histogram" in dist:
        svg = svg_histogram(
            dist["histogram"]["edges"], dist["histogram"]["density"], title=title
        )
    else:
        svg = svg_categorical(dist["values"], title=title)
    with open(plot_path, "w", encoding="utf-8") as fh:
        fh.write(svg)
    click.echo(f"plot -> {plot_path}")


@cli.command()
@click.argument("bundle_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--node", required=True)
@click.option("--value", "values", multiple=True, help="var=value (repeatable)")
@click.option("--tau", type=float, default=0.1, show_default=True)
@click.option("--trace", "trace_path", type=click.Path(exists=True, dir_okay=False),
              help="live trace for ripple analysis")
def detect(bundle_path, node, values, tau, trace_path):
    """Score a value row against a node; with a trace, follow the ripple."""
    bundle = load_bundle(bundle_path)
    row = dict(_parse_assignment(v) for v in values)
    if not row:
        raise click.UsageError("at least one --value var=value is required")
    live = trace_mod.read_log(trace_path) if trace_path else None
    report = check(
        bundle.network, AnomalyConfig(threshold=tau), node, row,
        trace=live, static=bundle.static,
    )
    _echo_json(report.to_dict())


@cli.command()
@click.argument("bundle_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--target", required=True, help="executable id, e.g. NutritionAdvisor.advice")
@click.option("--stratum", type=click.Choice(["typical", "rare", "impossible"]), required=True)
@click.option("-n", "--count", type=int, default=50, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False), required=True)
@click.option("--emit-ml0", "emit_dir", type=click.Path(file_okay=False),
              help="also write a runnable ML0 driver program here")
def gentest(bundle_path, target, stratum, count, seed, output, emit_dir):
    """Generate a test suite from the fitted argument models."""
    import os

    bundle = load_bundle(bundle_path)
    suite = generate_tests(bundle.network, bundle.static, target, stratum, count, seed=seed)
    with open(output, "w", encoding="utf-8") as fh:
        json.dump(suite.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    click.echo(f"{stratum} suite: {len(suite.cases)} cases "
               f"({suite.attempts} attempts) -> {output}")
    if emit_dir:
        if bundle.source is None:
            raise PsmError(
                "bundle has no embedded source (refit with --src) so ML0 "
                "drivers cannot be emitted"
            )
        os.makedirs(emit_dir, exist_ok=True)
        path = os.path.join(emit_dir, f"suite_{stratum}.ml0")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(emit_ml0(suite, bundle.static, bundle.source))
        click.echo(f"driver -> {path}")


@cli.command(name="simulate")
@click.argument("bundle_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--entry", required=True, help="executable id to start from")
@click.option("-n", "--runs", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--set", "overrides", multiple=True,
              help="var=value or var=lo..hi override on the entry node")
@click.option("-o", "--output", type=click.Path(dir_okay=False))
def simulate_cmd(bundle_path, entry, runs, seed, overrides, output):
    """Sample the entry model and propagate values downstream."""
    bundle = load_bundle(bundle_path)
    over = dict(_parse_assignment(o) for o in overrides)
    summary = simulate(bundle.network, bundle.static, entry, runs, seed=seed,
                       overrides=over or None)
    payload = summary.to_dict()
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        click.echo(f"simulation ({runs} runs) -> {output}")
    else:
        _echo_json(payload)


@cli.command()
@click.argument("old_bundle", type=click.Path(exists=True, dir_okay=False))
@click.argument("new_bundle", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["integrity", "compatibility"]),
              default="integrity", show_default=True)
def diff(old_bundle, new_bundle, mode):
    """Divergence report between two bundles."""
    a = load_bundle(old_bundle)
    b = load_bundle(new_bundle)
    report = compare(a.network, b.network, mode, static_a=a.static, static_b=b.static)
    _echo_json(report.to_dict())


@cli.command()
@click.argument("bundle_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def serve(bundle_path, port, host, seed):
    """Serve the HTTP API over a bundle (read-only)."""
    import uvicorn

    from psm.server import create_app

    bundle = load_bundle(bundle_path)
    app = create_app(bundle, server_seed=seed)
    click.echo(f"serving bundle {bundle.content_hash[:12]} on {host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main(argv=None) -> int:
    json_errors = "--json" in (argv or sys.argv[1:])
    try:
        cli.main(args=argv, standalone_mode=False, obj={})
        return 0
    except click.exceptions.Abort:
        return 1
    except click.ClickException as exc:
        _report_error("usage", exc.format_message(), json_errors)
        return 1
    except PsmError as exc:
        _report_error(type(exc).__name__, str(exc), json_errors)
        return 2
    except Exception as exc:  # noqa: BLE001 - boundary of the process
        _report_error(type(exc).__name__, str(exc), json_errors)
        return 3


def _report_error(kind: str, message: str, as_json: bool) -> None:
    if as_json:
        sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    else:
        sys.stderr.write(f"error ({kind}): {message}\n")


if __name__ == "__main__":
    sys.exit(main())
