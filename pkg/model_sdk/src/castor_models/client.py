"""HTTP client for the forecasting service, used by models at run time."""
from __future__ import annotations

import base64
import os

import requests

from .timeparse import format_rfc3339, parse_rfc3339


class ServiceError(Exception):
    """Non-2xx response from the service; message carries the error name."""


class ServiceClient:
    def __init__(self, base_url: str, token: str | None = None, timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        if token is None:
            token = os.environ.get("CASTORLITE_TOKEN")
        self._headers = {"Authorization": f"Bearer {token}"} if token else {}
        self.timeout = timeout

    def _request(self, method: str, path: str, **kwargs) -> dict:
        resp = requests.request(
            method,
            self.base_url + path,
            headers=self._headers,
            timeout=self.timeout,
            **kwargs,
        )
        if resp.status_code >= 400:
            try:
                doc = resp.json()
                detail = f"{doc.get('error', 'HTTPError')}: {doc.get('message', '')}"
            except ValueError:
                detail = f"HTTPError: status {resp.status_code}"
            raise ServiceError(detail)
        return resp.json()

    def get_timeseries(
        self, entity: str, signal: str, start: float, end: float
    ) -> list[tuple[float, float]]:
        doc = self._request(
            "GET",
            "/timeseries",
            params={
                "entity": entity,
                "signal": signal,
                "start": format_rfc3339(start),
                "end": format_rfc3339(end),
            },
        )
        return [(parse_rfc3339(t), float(v)) for t, v in doc["points"]]

    def get_weather(
        self, lat: float, lon: float, start: float, end: float
    ) -> dict[str, list[tuple[float, float]]]:
        doc = self._request(
            "GET",
            "/weather",
            params={
                "lat": lat,
                "lon": lon,
                "start": format_rfc3339(start),
                "end": format_rfc3339(end),
            },
        )
        return {
            var: [(parse_rfc3339(t), float(v)) for t, v in points]
            for var, points in doc.items()
        }

    def get_model_version(
        self, model_id: str, selector: int | str = "latest"
    ) -> tuple[bytes, dict]:
        doc = self._request("GET", f"/models/{model_id}/versions/{selector}")
        return base64.b64decode(doc["blob"]), doc["metadata"]

    def bind_series(self, entity: str, signal: str) -> int:
        """Series id for a context, binding one if none exists yet."""
        params = {"entity": entity, "signal": signal}
        try:
            return self._request("GET", "/series", params=params)["id"]
        except ServiceError as exc:
            if "UnknownSeries" not in str(exc):
                raise
        return self._request("PUT", "/series", json=params)["id"]

    def post_points(self, series_id: int, points: list[tuple[float, float]]) -> int:
        body = [[format_rfc3339(t), v] for t, v in points]
        doc = self._request("POST", f"/series/{series_id}/points", json=body)
        return doc["accepted"]
