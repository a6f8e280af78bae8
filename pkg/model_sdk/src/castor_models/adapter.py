"""Wire-protocol adapter: one JobSpec in on stdin, one JobResult out on stdout.

Nothing but the result JSON is ever written to stdout; diagnostics go to
stderr.  Output is deterministic for a given spec and service state so
repeated runs are byte-identical.
"""
from __future__ import annotations

import base64
import json
import sys

from .client import ServiceClient
from .interface import ModelInterface
from .timeparse import format_rfc3339


class ProtocolAdapter:
    def __init__(self, model_class: type[ModelInterface], stdin=None, stdout=None):
        self.model_class = model_class
        self.stdin = stdin if stdin is not None else sys.stdin
        self.stdout = stdout if stdout is not None else sys.stdout

    def run(self) -> int:
        try:
            result = self._handle(json.loads(self.stdin.read()))
        except Exception as exc:  # noqa: BLE001 - everything goes over the wire
            self._emit({"status": "error", "message": f"{type(exc).__name__}: {exc}"})
            return 1
        self._emit(result)
        return 0

    def _handle(self, spec: dict) -> dict:
        client = ServiceClient(spec["service_url"])
        model = self.model_class(spec, client)
        if model.task == "train":
            model.load()
            model.transform()
            fitted = model.train()
            blob = json.dumps(fitted, sort_keys=True).encode()
            return {
                "status": "ok",
                "model_blob": base64.b64encode(blob).decode(),
                "metadata": {
                    "train_time": model.user_params["due_time"],
                    "n_rows": model.n_rows,
                },
            }
        if model.task == "score":
            fitted = None
            if model.requires_trained_model:
                selector = (
                    model.model_version
                    if model.model_version is not None
                    else "latest"
                )
                blob, _meta = client.get_model_version(model.model_id, selector)
                fitted = json.loads(blob)
            model.load()
            model.transform()
            points = model.score(fitted)
            return {
                "status": "ok",
                "points": [[format_rfc3339(t), v] for t, v in points],
            }
        raise ValueError(f"unknown task {model.task!r}")

    def _emit(self, result: dict) -> None:
        self.stdout.write(json.dumps(result) + "\n")
        self.stdout.flush()


def run_model(model_class: type[ModelInterface], stdin=None, stdout=None) -> int:
    """Run one job through the adapter; returns the process exit code."""
    return ProtocolAdapter(model_class, stdin=stdin, stdout=stdout).run()
