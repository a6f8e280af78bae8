import json
import sys
import threading

import pytest

from castorlite.errors import (
    BlobTooLarge,
    IncompleteRanking,
    MalformedConfig,
    NoVersions,
    UnknownContext,
    UnknownModel,
    UnknownVersion,
    UnresolvableImplementation,
)
from castorlite.registry import DeploymentConfig
from conftest import alg2_config, add_manifest_entry


def test_register_literal_config(bound_context):
    platform, _ = bound_context
    model_id = platform.registry.register_deployment(alg2_config())
    assert model_id.startswith("m-")
    config = platform.registry.get_deployment(model_id)
    assert config.dist_ver == "1.0.0"
    assert config.user_parameters["frequency"] == "15T"
    assert config.training_schedule.repeat_every == 604_800
    assert config.scoring_schedule.repeat_every == 3_600


def test_config_round_trip_exact_field_names(bound_context):
    doc = alg2_config()
    config = DeploymentConfig.from_json(doc)
    assert config.to_json() == doc
    # a second parse of the serialized form is identical too
    assert DeploymentConfig.from_json(config.to_json()).to_json() == doc


def test_config_requires_a_schedule(bound_context):
    platform, _ = bound_context
    doc = alg2_config()
    del doc["training_deployment"]
    del doc["scoring_deployment"]
    with pytest.raises(MalformedConfig):
        platform.registry.register_deployment(doc)


@pytest.mark.parametrize("missing", ["model_name", "dist_name", "dist_ver", "module"])
def test_config_reports_field_path(bound_context, missing):
    platform, _ = bound_context
    doc = alg2_config()
    del doc[missing]
    with pytest.raises(MalformedConfig, match=missing):
        platform.registry.register_deployment(doc)


def test_register_requires_bound_context(platform):
    with pytest.raises(UnknownContext):
        platform.registry.register_deployment(alg2_config())


def test_register_requires_resolvable_implementation(bound_context):
    platform, _ = bound_context
    with pytest.raises(UnresolvableImplementation):
        platform.registry.register_deployment(alg2_config(dist="missing-dist"))


def test_programmatic_fleet_deployment(platform):
    """174 deployments generated from 6 implementations over queried contexts."""
    sem = platform.semantics
    sem.register_signal("ENERGY_LOAD", "kWh", "energy")
    for i in range(29):
        sem.register_entity(f"P{i}", "PROSUMER")
        sem.bind_timeseries(f"P{i}", "ENERGY_LOAD")
    impls = [f"impl-{k}" for k in range(6)]
    for impl in impls:
        add_manifest_entry(platform, impl, "1.0.0",
                           [sys.executable, "-m", "castorlite.runners.naive"])
    contexts = sem.query_contexts(signal_name="ENERGY_LOAD")
    model_ids = set()
    for ctx in contexts:
        for impl in impls:
            model_ids.add(platform.registry.register_deployment(
                alg2_config(entity=ctx.entity.name, dist=impl)
            ))
    assert len(model_ids) == 174


def test_resolve_implementation(platform):
    spec = platform.registry.resolve_implementation(
        "builtin-naive", "1.0.0", "NaiveModel"
    )
    assert spec.command == sys.executable
    assert spec.args[-1] == "NaiveModel"
    other = platform.registry.resolve_implementation(
        "builtin-naive", "1.0.0", "OtherModel"
    )
    assert other.command == spec.command
    assert other.args[-1] == "OtherModel"
    with pytest.raises(UnresolvableImplementation):
        platform.registry.resolve_implementation("builtin-naive", "9.9.9", "X")


def test_model_versions_sequence(bound_context):
    platform, _ = bound_context
    model_id = platform.registry.register_deployment(alg2_config())
    assert platform.registry.save_model_version(model_id, b"one", {}) == 1
    assert platform.registry.save_model_version(model_id, b"two", {}) == 2
    assert platform.registry.save_model_version(model_id, b"three", {}) == 3
    assert platform.registry.get_model_version(model_id, 2).blob == b"two"
    assert platform.registry.get_model_version(model_id, "latest").blob == b"three"


def test_model_version_round_trip_bits(bound_context):
    platform, _ = bound_context
    model_id = platform.registry.register_deployment(alg2_config())
    blob = bytes(range(256)) * 17
    platform.registry.save_model_version(model_id, blob, {"train_time": "t"})
    assert platform.registry.get_model_version(model_id, "latest").blob == blob


def test_model_version_errors(bound_context):
    platform, _ = bound_context
    model_id = platform.registry.register_deployment(alg2_config())
    with pytest.raises(NoVersions):
        platform.registry.get_model_version(model_id, "latest")
    with pytest.raises(UnknownModel):
        platform.registry.save_model_version("m-nope", b"", {})
    platform.registry.save_model_version(model_id, b"x", {})
    with pytest.raises(UnknownVersion):
        platform.registry.get_model_version(model_id, 5)


def test_concurrent_saves_yield_gapless_versions(bound_context):
    platform, _ = bound_context
    model_id = platform.registry.register_deployment(alg2_config())
    versions = []
    lock = threading.Lock()

    def save(i):
        v = platform.registry.save_model_version(model_id, f"blob{i}".encode(), {})
        with lock:
            versions.append(v)

    threads = [threading.Thread(target=save, args=(i,)) for i in range(10)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sorted(versions) == list(range(1, 11))


def test_blob_cap(bound_context):
    platform, _ = bound_context
    platform.registry.blob_cap = 1024
    model_id = platform.registry.register_deployment(alg2_config())
    with pytest.raises(BlobTooLarge):
        platform.registry.save_model_version(model_id, b"x" * 2048, {})


def test_ranking_and_best_model(bound_context):
    platform, _ = bound_context
    ids = [platform.registry.register_deployment(alg2_config()) for _ in range(4)]
    gam, lr, ann, lstm = ids[1], ids[0], ids[2], ids[3]
    platform.registry.set_ranking("S1", "ENERGY_LOAD", [gam, lr, ann, lstm])
    assert platform.registry.best_model("S1", "ENERGY_LOAD") == gam


def test_best_model_defaults_to_single_deployment(bound_context):
    platform, _ = bound_context
    model_id = platform.registry.register_deployment(alg2_config())
    assert platform.registry.best_model("S1", "ENERGY_LOAD") == model_id


def test_ranking_must_be_complete(bound_context):
    platform, _ = bound_context
    ids = [platform.registry.register_deployment(alg2_config()) for _ in range(2)]
    with pytest.raises(IncompleteRanking):
        platform.registry.set_ranking("S1", "ENERGY_LOAD", ids[:1])


def test_best_model_unaffected_by_other_contexts(bound_context):
    platform, _ = bound_context
    ids = [platform.registry.register_deployment(alg2_config()) for _ in range(2)]
    platform.registry.set_ranking("S1", "ENERGY_LOAD", [ids[1], ids[0]])
    platform.semantics.register_entity("S2", "SUBSTATION")
    platform.semantics.bind_timeseries("S2", "ENERGY_LOAD")
    platform.registry.register_deployment(alg2_config(entity="S2"))
    assert platform.registry.best_model("S1", "ENERGY_LOAD") == ids[1]


def test_new_deployment_appends_at_lowest_rank(bound_context):
    platform, _ = bound_context
    a = platform.registry.register_deployment(alg2_config())
    b = platform.registry.register_deployment(alg2_config())
    platform.registry.set_ranking("S1", "ENERGY_LOAD", [b, a])
    c = platform.registry.register_deployment(alg2_config())
    ranked = platform.semantics.list_deployed_models("S1", "ENERGY_LOAD")
    assert ranked == [(b, 1), (a, 2), (c, 3)]
