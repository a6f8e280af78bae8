"""Fixtures: a real service instance is the integration environment; the SDK
under test talks to it only over HTTP and the stdio wire protocol."""
import io
import json
import sys
from pathlib import Path

import pytest

from castorlite import Platform
from castorlite.server import ServiceHandle
from castorlite.timeutil import parse_rfc3339, format_rfc3339

from castor_models.adapter import run_model

T0 = parse_rfc3339("2019-03-01T00:00:00+00:00")
HOUR = 3600.0
DIST = "reference-models"
VER = "1.0.0"


@pytest.fixture
def service(tmp_path: Path):
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({
        DIST: {VER: [sys.executable, "-m", "castor_models.runner"]},
    }))
    platform = Platform(tmp_path / "data", manifest_path=manifest)
    platform.semantics.register_entity("S1", "SUBSTATION", 34.9, 33.6)
    platform.semantics.register_signal("ENERGY_LOAD", "kWh", "energy")
    platform.semantics.bind_timeseries("S1", "ENERGY_LOAD")
    with ServiceHandle(platform) as handle:
        yield platform, handle


def deploy(platform, module: str, entity="S1", signal="ENERGY_LOAD", **user_params) -> str:
    params = {"frequency": "1H"}
    params.update(user_params)
    return platform.registry.register_deployment({
        "context": {"entity": entity, "signal": signal},
        "model_name": module,
        "dist_name": DIST,
        "dist_ver": VER,
        "module": module,
        "scoring_deployment": {"time": "2019-03-01T00:00:00+00:00",
                               "repeatEvery": "1_hours"},
        "user_parameters": params,
    })


def job_spec(platform, model_id: str, task: str, due: float,
             service_url: str, entity="S1", signal="ENERGY_LOAD",
             model_version=None, **user_params) -> dict:
    config = platform.registry.get_deployment(model_id)
    params = dict(config.user_parameters)
    params.update(user_params)
    params["due_time"] = format_rfc3339(due)
    return {
        "task": task,
        "context": platform.semantics.context(entity, signal).to_json(),
        "model_id": model_id,
        "model_version": model_version,
        "user_params": params,
        "service_url": service_url,
        "job_id": "j-test",
    }


def run_adapter(model_class, spec: dict) -> tuple[int, dict]:
    """Drive the adapter in-process; returns (exit_code, parsed result)."""
    out = io.StringIO()
    code = run_model(model_class, stdin=io.StringIO(json.dumps(spec)), stdout=out)
    return code, json.loads(out.getvalue())
