"""Builtin naive (persistence) runner.

Speaks the executor wire protocol on stdin/stdout and fetches history over
the platform HTTP API.  Training encodes the last observed value; scoring
emits a flat forecast at the last observed value over the configured
horizon and frequency.

Invoke as: python -m castorlite.runners.naive [module-name]
"""
from __future__ import annotations

import base64
import json
import os
import sys

import requests

from ..timeutil import FrequencySpec, parse_duration, parse_rfc3339, format_rfc3339

DEFAULT_LOOKBACK_S = 7 * 86400.0


def _fetch_history(spec: dict) -> list:
    entity = spec["context"]["entity"]["name"]
    signal = spec["context"]["signal"]["name"]
    due = parse_rfc3339(spec["user_params"]["due_time"])
    lookback = parse_duration(str(spec["user_params"].get("lookback", "7D")))
    headers = {}
    token = os.environ.get("CASTORLITE_TOKEN")
    if token:
        headers["Authorization"] = f"Bearer {token}"
    resp = requests.get(
        spec["service_url"].rstrip("/") + "/timeseries",
        params={
            "entity": entity,
            "signal": signal,
            "start": format_rfc3339(due - lookback),
            "end": format_rfc3339(due + 1.0),  # include a reading at the due instant
        },
        headers=headers,
        timeout=60,
    )
    resp.raise_for_status()
    return resp.json()["points"]


def handle(spec: dict) -> dict:
    history = _fetch_history(spec)
    if not history:
        return {"status": "error", "message": "NoData: context has no history"}
    last_value = float(history[-1][1])
    if spec["task"] == "train":
        blob = json.dumps({"last_value": last_value}).encode()
        return {
            "status": "ok",
            "model_blob": base64.b64encode(blob).decode(),
            "metadata": {"n_rows": len(history), "train_time": spec["user_params"]["due_time"]},
        }
    due = parse_rfc3339(spec["user_params"]["due_time"])
    freq = FrequencySpec.parse(str(spec["user_params"].get("frequency", "1H")))
    horizon = parse_duration(str(spec["user_params"].get("horizon", "24H")))
    n = int(horizon // freq.seconds)
    points = [
        [format_rfc3339(due + (k + 1) * freq.seconds), last_value] for k in range(n)
    ]
    return {"status": "ok", "points": points}


def main() -> int:
    try:
        spec = json.loads(sys.stdin.read())
        result = handle(spec)
    except Exception as exc:  # noqa: BLE001 - report everything over the wire
        print(json.dumps({"status": "error", "message": f"{type(exc).__name__}: {exc}"}))
        return 1
    print(json.dumps(result))
    return 0 if result["status"] == "ok" else 1


if __name__ == "__main__":
    sys.exit(main())
