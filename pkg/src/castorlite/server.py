"""HTTP API over the platform (one process, two route groups).

Runners and operators use the same surface.  When a bearer token is
configured, every route except /health requires it.
"""
from __future__ import annotations

import base64
import socket
import threading
import time

import uvicorn
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .errors import CastorError, UnknownVersion
from .platform import Platform
from .timeutil import FrequencySpec, format_rfc3339, parse_duration, parse_rfc3339


def create_app(platform: Platform, token: str | None = None) -> FastAPI:
    app = FastAPI(title="castorlite", docs_url=None, redoc_url=None)

    @app.exception_handler(CastorError)
    async def castor_error_handler(_request: Request, exc: CastorError):
        return JSONResponse(
            status_code=exc.http_status,
            content={"error": type(exc).__name__, "message": str(exc)},
        )

    @app.middleware("http")
    async def auth(request: Request, call_next):
        if token and request.url.path != "/health":
            header = request.headers.get("authorization", "")
            if header != f"Bearer {token}":
                return JSONResponse(status_code=401, content={"error": "Unauthorized"})
        return await call_next(request)

    @app.get("/health")
    async def health():
        return {"status": "ok"}

    # --- semantic store ---

    @app.put("/entities")
    async def put_entity(body: dict):
        entity_id = platform.semantics.register_entity(
            name=body["name"],
            kind=body["kind"],
            latitude=body.get("latitude"),
            longitude=body.get("longitude"),
            attributes=body.get("attributes"),
        )
        return {"id": entity_id, "name": body["name"]}

    @app.put("/signals")
    async def put_signal(body: dict):
        signal_id = platform.semantics.register_signal(
            name=body["name"], unit=body["unit"], quantity=body["quantity"]
        )
        return {"id": signal_id, "name": body["name"]}

    @app.put("/series")
    async def put_series(body: dict):
        series_id = platform.semantics.bind_timeseries(body["entity"], body["signal"])
        return {"id": series_id}

    @app.get("/series")
    async def get_series(entity: str, signal: str):
        return {"id": platform.semantics.series_id(entity, signal)}

    @app.put("/topology")
    async def put_topology(body: dict):
        edge_id = platform.semantics.add_topology_edge(
            body["parent"], body["child"], body["relation"]
        )
        return {"id": edge_id}

    @app.get("/contexts")
    async def get_contexts(signal: str | None = None, kind: str | None = None,
                           under: str | None = None):
        contexts = platform.semantics.query_contexts(
            entity_kind=kind, signal_name=signal, under_entity=under
        )
        return {"contexts": [c.to_json() for c in contexts]}

    # --- timeseries ---

    @app.post("/series/{series_id}/points")
    async def post_points(series_id: int, request: Request):
        body = await request.json()
        points = [(parse_rfc3339(ts), float(v)) for ts, v in body]
        accepted = platform.timeseries.ingest(series_id, points)
        return {"accepted": accepted}

    @app.get("/timeseries")
    async def get_timeseries(entity: str, signal: str, start: str, end: str):
        ctx = platform.semantics.require_bound_context(entity, signal)
        window = platform.timeseries.get_timeseries(
            ctx, parse_rfc3339(start), parse_rfc3339(end)
        )
        return {
            "start": format_rfc3339(window.start),
            "end": format_rfc3339(window.end),
            "points": [[format_rfc3339(t), v] for t, v in window.points],
        }

    @app.get("/weather")
    async def get_weather(lat: float, lon: float, start: str, end: str):
        data = platform.weather.get_weather(
            lat, lon, parse_rfc3339(start), parse_rfc3339(end)
        )
        return {
            variable: [[format_rfc3339(t), v] for t, v in window.points]
            for variable, window in data.items()
        }

    @app.get("/stats/ingestion")
    async def ingestion_stats(bucket: str = "1H", start: str | None = None,
                              end: str | None = None):
        stats = platform.timeseries.ingestion_stats(
            FrequencySpec.parse(bucket),
            parse_rfc3339(start) if start else None,
            parse_rfc3339(end) if end else None,
        )
        return {"buckets": [[format_rfc3339(b), n] for b, n in stats]}

    # --- model registry ---

    @app.post("/models")
    async def post_model(body: dict):
        model_id = platform.registry.register_deployment(body)
        return {"model_id": model_id}

    @app.get("/models")
    async def list_models(entity: str | None = None, signal: str | None = None):
        if entity and signal:
            ranked = platform.semantics.list_deployed_models(entity, signal)
            return {"models": [{"model_id": m, "rank": r} for m, r in ranked]}
        return {"models": [c.to_json() for c in platform.registry.list_deployments()]}

    @app.get("/models/{model_id}")
    async def get_model(model_id: str):
        return platform.registry.get_deployment(model_id).to_json()

    @app.get("/models/{model_id}/versions/{selector}")
    async def get_model_version(model_id: str, selector: str):
        if selector != "latest":
            try:
                int(selector)
            except ValueError as exc:
                raise UnknownVersion(f"bad version selector {selector!r}") from exc
        mv = platform.registry.get_model_version(model_id, selector)
        return {
            "model_id": mv.model_id,
            "version": mv.version,
            "blob": base64.b64encode(mv.blob).decode(),
            "metadata": mv.metadata,
        }

    @app.put("/contexts/{entity}/{signal}/ranking")
    async def put_ranking(entity: str, signal: str, request: Request):
        body = await request.json()
        platform.registry.set_ranking(entity, signal, list(body))
        return {"ranking": body}

    # --- forecasts ---

    @app.post("/forecasts")
    async def post_forecast(body: dict):
        count = platform.forecasts.save_forecast(
            model_id=body["model_id"],
            model_version=body.get("model_version"),
            entity_name=body["context"]["entity"],
            signal_name=body["context"]["signal"],
            issued_at=parse_rfc3339(body["issued_at"]),
            points=[(parse_rfc3339(t), float(v)) for t, v in body["points"]],
        )
        return {"stored": count}

    # 'from' is not a valid Python parameter name, so read the query directly.
    @app.get("/forecasts")
    async def get_forecasts_rows(request: Request):
        q = request.query_params
        entity, signal = q["entity"], q["signal"]
        start = parse_rfc3339(q["from"]) if "from" in q else float("-inf")
        end = parse_rfc3339(q["to"]) if "to" in q else float("inf")
        model = q.get("model")
        if "horizon" in q:
            if model is None:
                model = platform.registry.best_model(entity, signal)
            horizon = parse_duration(q["horizon"])
            sl = platform.forecasts.get_by_horizon(
                entity, signal, model, horizon, start, end
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
                    entity, signal, start, end, model
                )
            ]
        return {"forecasts": rows}

    return app


class ServiceHandle:
    """A uvicorn server on a background thread, for tests, runners and the CLI."""

    def __init__(self, platform: Platform, token: str | None = None,
                 host: str = "127.0.0.1", port: int = 0):
        if port == 0:
            with socket.socket() as s:
                s.bind((host, 0))
                port = s.getsockname()[1]
        self.host, self.port = host, port
        self.base_url = f"http://{host}:{port}"
        app = create_app(platform, token=token)
        config = uvicorn.Config(app, host=host, port=port, log_level="warning")
        self._server = uvicorn.Server(config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    def start(self, wait_s: float = 10.0) -> "ServiceHandle":
        self._thread.start()
        deadline = time.time() + wait_s
        while time.time() < deadline:
            if self._server.started:
                return self
            time.sleep(0.02)
        raise RuntimeError("HTTP service failed to start in time")

    def stop(self) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=10.0)

    def __enter__(self) -> "ServiceHandle":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
