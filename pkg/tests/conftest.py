import json
import sys
from pathlib import Path

import pytest

from castorlite import Platform
from castorlite.timeutil import parse_rfc3339

T0 = parse_rfc3339("2019-03-01T00:00:00+00:00")
HOUR = 3600.0


@pytest.fixture
def platform(tmp_path: Path) -> Platform:
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({
        "builtin-naive": {"1.0.0": [sys.executable, "-m", "castorlite.runners.naive"]},
    }))
    return Platform(tmp_path / "data", manifest_path=manifest)


@pytest.fixture
def bound_context(platform: Platform):
    """S1/ENERGY_LOAD registered and bound; returns (platform, series_id)."""
    platform.semantics.register_entity("S1", "SUBSTATION", 34.9, 33.6)
    platform.semantics.register_signal("ENERGY_LOAD", "kWh", "energy")
    series_id = platform.semantics.bind_timeseries("S1", "ENERGY_LOAD")
    return platform, series_id


def alg2_config(entity="S1", signal="ENERGY_LOAD", dist="builtin-naive",
                ver="1.0.0", module="NaiveModel", **user_params) -> dict:
    params = {"frequency": "15T", "train_time": ["2018-01-01", "2019-01-01"]}
    params.update(user_params)
    return {
        "context": {"entity": entity, "signal": signal},
        "model_name": "myModel",
        "dist_name": dist,
        "dist_ver": ver,
        "module": module,
        "training_deployment": {
            "time": "2019-03-01T00:00:00+00:00",
            "repeatEvery": "1_week",
        },
        "scoring_deployment": {
            "time": "2019-03-01T00:00:00+00:00",
            "repeatEvery": "1_hours",
        },
        "user_parameters": params,
    }


def add_manifest_entry(platform: Platform, dist: str, ver: str, argv: list[str]):
    path = platform.registry.manifest_path
    manifest = json.loads(path.read_text()) if path.exists() else {}
    manifest.setdefault(dist, {})[ver] = argv
    path.write_text(json.dumps(manifest))


def make_pool(platform: Platform, service_url="http://localhost:0", **kwargs):
    from castorlite.executor import JobPool

    return JobPool(
        platform.store, platform.semantics, platform.registry, platform.forecasts,
        service_url=service_url, **kwargs,
    )
