"""Operator CLI binding all platform modules together."""
from __future__ import annotations

import csv
import io
import json
import os
import sys
import time

import click

from .errors import BadConfig, CastorError
from .executor import JobPool, job_metrics, job_records
from .platform import Platform
from .scale import jobs_per_hour, run_experiment
from .server import ServiceHandle, create_app
from .synth import synthetic_load
from .timeutil import (
    FrequencySpec,
    format_rfc3339,
    parse_duration,
    parse_rfc3339,
)


def _platform(ctx: click.Context) -> Platform:
    if ctx.obj.get("platform") is None:
        ctx.obj["platform"] = Platform(
            data_dir=ctx.obj["data_dir"], manifest_path=ctx.obj["manifest"]
        )
    return ctx.obj["platform"]


def _emit(rows: list[dict], fmt: str) -> None:
    if fmt == "json":
        click.echo(json.dumps(rows, indent=2))
        return
    if not rows:
        return
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()))
    writer.writeheader()
    writer.writerows(rows)
    click.echo(buf.getvalue().rstrip("\n"))


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


@click.group()
@click.option("--data-dir", envvar="CASTORLITE_DATA_DIR", default="./castorlite-data",
              show_default=True, help="Data directory holding the embedded store.")
@click.option("--manifest", envvar="CASTORLITE_MANIFEST", default=None,
              help="Path to the runner manifest JSON.")
@click.pass_context
def cli(ctx: click.Context, data_dir: str, manifest: str | None):
    """castorlite: time-series forecasting model fleet manager."""
    ctx.ensure_object(dict)
    ctx.obj["data_dir"] = data_dir
    ctx.obj["manifest"] = manifest


# --- serve / run ---

@cli.command()
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.pass_context
def serve(ctx, port: int, host: str):
    """Run the HTTP API."""
    try:
        platform = _platform(ctx)
        if platform.registry.manifest_path is None:
            raise BadConfig("runner manifest path is required (--manifest / CASTORLITE_MANIFEST)")
        import uvicorn

        app = create_app(platform, token=os.environ.get("CASTORLITE_TOKEN"))
        uvicorn.run(app, host=host, port=port, log_level="info")
    except CastorError as exc:
        _fail(exc)


@cli.command()
@click.option("--tick-seconds", default=60.0, show_default=True)
@click.option("--max-parallel", default=4, show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--runner-timeout", default=300.0, show_default=True)
@click.pass_context
def run(ctx, tick_seconds: float, max_parallel: int, port: int, runner_timeout: float):
    """Serve the API and run the scheduler tick loop with a live worker pool."""
    try:
        platform = _platform(ctx)
        token = os.environ.get("CASTORLITE_TOKEN")
        service = ServiceHandle(platform, token=token, port=port).start()
        pool = JobPool(
            platform.store, platform.semantics, platform.registry, platform.forecasts,
            service_url=service.base_url, max_parallel=max_parallel,
            timeout_s=runner_timeout,
        )
        pool.start()
        click.echo(f"serving on {service.base_url}; ticking every {tick_seconds}s")
        try:
            while True:
                for request in platform.scheduler.tick(time.time()):
                    job_id = pool.submit(request)
                    click.echo(
                        f"submitted {job_id} {request.task} {request.model_id} "
                        f"due {format_rfc3339(request.due_time)}"
                    )
                time.sleep(tick_seconds)
        except KeyboardInterrupt:
            pass
        finally:
            pool.shutdown()
            service.stop()
    except CastorError as exc:
        _fail(exc)


# --- context group ---

@cli.group()
def context():
    """Semantic graph: register entities/signals, bind series, query contexts."""


@context.command("register")
@click.option("--entity", default=None, help="Entity name to register.")
@click.option("--kind", default=None)
@click.option("--lat", type=float, default=None)
@click.option("--lon", type=float, default=None)
@click.option("--signal", default=None, help="Signal name to register.")
@click.option("--unit", default=None)
@click.option("--quantity", default=None)
@click.option("--parent", default=None, help="Add a topology edge parent->child.")
@click.option("--child", default=None)
@click.option("--relation", default="FEEDS", show_default=True)
@click.pass_context
def context_register(ctx, entity, kind, lat, lon, signal, unit, quantity,
                     parent, child, relation):
    try:
        platform = _platform(ctx)
        if entity:
            eid = platform.semantics.register_entity(entity, kind or "ENTITY", lat, lon)
            click.echo(f"entity {entity} id={eid}")
        if signal:
            sid = platform.semantics.register_signal(signal, unit or "", quantity or "")
            click.echo(f"signal {signal} id={sid}")
        if parent and child:
            eid = platform.semantics.add_topology_edge(parent, child, relation)
            click.echo(f"edge {parent}->{child} id={eid}")
        if not (entity or signal or (parent and child)):
            raise click.UsageError("nothing to register")
    except CastorError as exc:
        _fail(exc)


@context.command("bind")
@click.option("--entity", required=True)
@click.option("--signal", required=True)
@click.pass_context
def context_bind(ctx, entity, signal):
    try:
        sid = _platform(ctx).semantics.bind_timeseries(entity, signal)
        click.echo(f"series id={sid}")
    except CastorError as exc:
        _fail(exc)


@context.command("query")
@click.option("--signal", default=None)
@click.option("--kind", default=None)
@click.option("--under", default=None)
@click.option("--format", "fmt", default="csv", type=click.Choice(["csv", "json"]))
@click.pass_context
def context_query(ctx, signal, kind, under, fmt):
    try:
        contexts = _platform(ctx).semantics.query_contexts(
            entity_kind=kind, signal_name=signal, under_entity=under
        )
        rows = [
            {"entity": c.entity.name, "kind": c.entity.kind, "signal": c.signal.name}
            for c in contexts
        ]
        _emit(rows, fmt)
    except CastorError as exc:
        _fail(exc)


# --- ingest / synth ---

@cli.command()
@click.option("--series", type=int, default=None, help="Series id.")
@click.option("--entity", default=None)
@click.option("--signal", default=None)
@click.option("--file", "path", required=True, type=click.Path(exists=True),
              help="CSV file with rows: timestamp,value")
@click.pass_context
def ingest(ctx, series, entity, signal, path):
    """Ingest points from a CSV file into a series."""
    try:
        platform = _platform(ctx)
        if series is None:
            if not (entity and signal):
                raise click.UsageError("pass --series or both --entity and --signal")
            series = platform.semantics.series_id(entity, signal)
        points = []
        with open(path, newline="") as f:
            for row in csv.reader(f):
                if not row or row[0].lower() == "timestamp":
                    continue
                points.append((parse_rfc3339(row[0]), float(row[1])))
        accepted = platform.timeseries.ingest(series, points)
        click.echo(f"accepted {accepted} points")
    except CastorError as exc:
        _fail(exc)


@cli.command()
@click.option("--days", default=30, show_default=True)
@click.option("--frequency", default="1H", show_default=True)
@click.option("--start", default="2019-01-01T00:00:00+00:00", show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--noise", default=0.0, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Write CSV here (default stdout).")
def synth(days, frequency, start, seed, noise, out):
    """Generate a deterministic seeded synthetic load series as CSV."""
    points = synthetic_load(
        parse_rfc3339(start), days, frequency, seed=seed, noise=noise
    )
    lines = ["timestamp,value"]
    lines += [f"{format_rfc3339(t)},{v:.6f}" for t, v in points]
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w") as f:
            f.write(text)
        click.echo(f"wrote {len(points)} points to {out}")
    else:
        click.echo(text.rstrip("\n"))


# --- deployments / models ---

@cli.command()
@click.option("--file", "path", required=True, type=click.Path(exists=True),
              help="Deployment configuration JSON.")
@click.pass_context
def deploy(ctx, path):
    """Register a model deployment from a configuration file."""
    try:
        with open(path) as f:
            config = json.load(f)
        model_id = _platform(ctx).registry.register_deployment(config)
        click.echo(model_id)
    except CastorError as exc:
        _fail(exc)


@cli.group()
def models():
    """Inspect registered deployments."""


@models.command("list")
@click.option("--format", "fmt", default="csv", type=click.Choice(["csv", "json"]))
@click.pass_context
def models_list(ctx, fmt):
    rows = [
        {
            "model_id": c.model_id,
            "model_name": c.model_name,
            "entity": c.entity_name,
            "signal": c.signal_name,
            "dist": f"{c.dist_name}=={c.dist_ver}",
            "module": c.module,
        }
        for c in _platform(ctx).registry.list_deployments()
    ]
    _emit(rows, fmt)


# --- scheduler / jobs ---

@cli.command()
@click.option("--now", "now_text", required=True, help="RFC 3339 instant to tick at.")
@click.option("--execute/--no-execute", default=True, show_default=True,
              help="Run emitted jobs through the worker pool.")
@click.option("--max-parallel", default=4, show_default=True)
@click.option("--runner-timeout", default=300.0, show_default=True)
@click.pass_context
def tick(ctx, now_text, execute, max_parallel, runner_timeout):
    """Run one manual scheduler tick at the given instant."""
    try:
        platform = _platform(ctx)
        requests = platform.scheduler.tick(parse_rfc3339(now_text))
        for r in requests:
            click.echo(f"due {r.task} {r.model_id} at {format_rfc3339(r.due_time)}")
        if execute and requests:
            token = os.environ.get("CASTORLITE_TOKEN")
            with ServiceHandle(platform, token=token) as service:
                pool = JobPool(
                    platform.store, platform.semantics, platform.registry,
                    platform.forecasts, service_url=service.base_url,
                    max_parallel=max_parallel, timeout_s=runner_timeout,
                    runner_env={"CASTORLITE_TOKEN": token} if token else None,
                )
                pool.start()
                ids = [pool.submit(r) for r in requests]
                pool.wait_idle()
                pool.shutdown()
                for job_id in ids:
                    rec = pool.get_record(job_id)
                    click.echo(f"{job_id} {rec.task} -> {rec.outcome}")
        click.echo(f"emitted {len(requests)} job request(s)")
    except CastorError as exc:
        _fail(exc)


@cli.group()
def jobs():
    """Inspect executed jobs."""


@jobs.command("list")
@click.option("--format", "fmt", default="csv", type=click.Choice(["csv", "json"]))
@click.pass_context
def jobs_list(ctx, fmt):
    rows = [
        {
            "job_id": r.job_id,
            "model_id": r.model_id,
            "task": r.task,
            "outcome": r.outcome or "pending",
            "duration_s": f"{r.duration:.3f}" if r.duration is not None else "",
        }
        for r in job_records(_platform(ctx).store)
    ]
    _emit(rows, fmt)


@jobs.command("show")
@click.argument("job_id")
@click.pass_context
def jobs_show(ctx, job_id):
    try:
        recs = [r for r in job_records(_platform(ctx).store) if r.job_id == job_id]
        if not recs:
            raise CastorError(f"no job {job_id!r}")
        r = recs[0]
        click.echo(json.dumps({
            "job_id": r.job_id, "model_id": r.model_id, "task": r.task,
            "submitted_at": format_rfc3339(r.submitted_at),
            "outcome": r.outcome, "duration_s": r.duration, "message": r.message,
        }, indent=2))
    except CastorError as exc:
        _fail(exc)


# --- forecasts / evaluation ---

@cli.command()
@click.option("--entity", required=True)
@click.option("--signal", required=True)
@click.option("--model", default=None)
@click.option("--horizon", default=None, help='e.g. "24H" or "1_hours"')
@click.option("--from", "start", default=None)
@click.option("--to", "end", default=None)
@click.option("--format", "fmt", default="csv", type=click.Choice(["csv", "json"]))
@click.pass_context
def forecasts(ctx, entity, signal, model, horizon, start, end, fmt):
    """Export stored forecasts (CSV: target_time,value,issued_at,model_id)."""
    try:
        platform = _platform(ctx)
        t0 = parse_rfc3339(start) if start else float("-inf")
        t1 = parse_rfc3339(end) if end else float("inf")
        if horizon is not None:
            if model is None:
                model = platform.registry.best_model(entity, signal)
            sl = platform.forecasts.get_by_horizon(
                entity, signal, model, parse_duration(horizon), t0, t1
            )
            rows = [
                {"target_time": format_rfc3339(t), "value": v,
                 "issued_at": format_rfc3339(i), "model_id": model}
                for t, v, i in sl.points
            ]
        else:
            rows = [
                {"target_time": format_rfc3339(t), "value": v,
                 "issued_at": format_rfc3339(i), "model_id": m}
                for t, v, i, m in platform.forecasts.get_forecasts(
                    entity, signal, t0, t1, model
                )
            ]
        _emit(rows, fmt)
    except CastorError as exc:
        _fail(exc)


@cli.command()
@click.option("--entity", required=True)
@click.option("--signal", required=True)
@click.option("--model", default=None)
@click.option("--horizon", default="1H", show_default=True)
@click.option("--from", "start", required=True)
@click.option("--to", "end", required=True)
@click.pass_context
def evaluate(ctx, entity, signal, model, horizon, start, end):
    """MAPE of stored forecasts against stored actuals for a period."""
    try:
        platform = _platform(ctx)
        if model is None:
            model = platform.registry.best_model(entity, signal)
        result = platform.forecasts.evaluate(
            platform.timeseries, entity, signal, model,
            parse_duration(horizon), parse_rfc3339(start), parse_rfc3339(end),
        )
        click.echo(json.dumps({"model_id": model, **result}))
    except CastorError as exc:
        _fail(exc)


# --- scalability harness ---

@cli.command("scale-test")
@click.option("--levels", default="10,50,100,150,175,200", show_default=True)
@click.option("--jobs-per-level", type=int, default=None,
              help="Jobs per level (default 3x the level).")
@click.option("--stub-seconds", default=0.2, show_default=True)
@click.option("--store-latency-ms", default=0.0, show_default=True)
@click.option("--format", "fmt", default="csv", type=click.Choice(["csv", "json"]))
@click.pass_context
def scale_test(ctx, levels, jobs_per_level, stub_seconds, store_latency_ms, fmt):
    """Parallel scoring-job sweep; reports jobs/hour per parallelism level."""
    try:
        platform = Platform(
            data_dir=ctx.obj["data_dir"], manifest_path=ctx.obj["manifest"],
            store_latency_s=store_latency_ms / 1000.0,
        )
        parallel_levels = [int(x) for x in levels.split(",") if x]
        report = run_experiment(
            platform, parallel_levels, jobs_per_level, stub_sleep_s=stub_seconds
        )
        if fmt == "csv":
            click.echo(report.to_csv().rstrip("\n"))
        else:
            click.echo(json.dumps([r.__dict__ for r in report.rows], indent=2))
    except CastorError as exc:
        _fail(exc)


def main() -> None:
    cli(obj={})


if __name__ == "__main__":
    main()
