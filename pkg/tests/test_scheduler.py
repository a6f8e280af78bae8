import pytest

from castorlite import Platform
from castorlite.registry import ScheduleSpec
from castorlite.scheduler import next_due
from castorlite.timeutil import parse_rfc3339
from conftest import T0, HOUR, alg2_config


def hourly_spec(start=T0):
    return ScheduleSpec(start_time=start, repeat_every=3600.0)


def test_next_due_at_start():
    assert next_due(hourly_spec(), T0) == T0


def test_next_due_ceils_to_grid():
    after = parse_rfc3339("2019-03-01T05:30:00+00:00")
    assert next_due(hourly_spec(), after) == parse_rfc3339("2019-03-01T06:00:00+00:00")


def test_next_due_run_once():
    once = ScheduleSpec(start_time=T0, repeat_every=None)
    assert next_due(once, T0) == T0
    assert next_due(once, T0 - 100) == T0
    assert next_due(once, T0 + 1) is None


def deploy_hourly(platform):
    platform.semantics.register_entity("S1", "SUBSTATION", 34.9, 33.6)
    platform.semantics.register_signal("ENERGY_LOAD", "kWh", "energy")
    platform.semantics.bind_timeseries("S1", "ENERGY_LOAD")
    doc = alg2_config()
    del doc["training_deployment"]
    return platform.registry.register_deployment(doc)


def test_tick_emits_one_per_occurrence(platform):
    deploy_hourly(platform)
    emitted = []
    now = T0
    while now < T0 + 24 * HOUR:
        emitted.extend(platform.scheduler.tick(now))
        now += 600  # 10-minute cadence
    assert len(emitted) == 24
    assert [r.due_time for r in emitted] == [T0 + k * HOUR for k in range(24)]
    assert all(r.task == "score" for r in emitted)


def test_tick_idempotent_at_same_now(platform):
    deploy_hourly(platform)
    first = platform.scheduler.tick(T0)
    assert len(first) == 1
    assert platform.scheduler.tick(T0) == []


def test_downtime_skips_to_latest_occurrence(platform):
    deploy_hourly(platform)
    platform.scheduler.tick(T0)
    # scheduler down for five hours; a single catch-up emission results
    emitted = platform.scheduler.tick(T0 + 5 * HOUR + 600)
    assert len(emitted) == 1
    assert emitted[0].due_time == T0 + 5 * HOUR  # latest missed occurrence


def test_no_emission_before_due_time(platform):
    deploy_hourly(platform)
    assert platform.scheduler.tick(T0 - 1) == []
    for request in platform.scheduler.tick(T0 + 90 * 60):
        assert request.due_time <= T0 + 90 * 60


def test_mark_fired_prevents_emission(platform):
    model_id = deploy_hourly(platform)
    platform.scheduler.mark_fired(model_id, "score", T0)
    assert platform.scheduler.tick(T0) == []


def test_mark_fired_idempotent(platform):
    model_id = deploy_hourly(platform)
    platform.scheduler.mark_fired(model_id, "score", T0)
    platform.scheduler.mark_fired(model_id, "score", T0)
    assert platform.ledger.size() == 1


def test_ledger_survives_restart(tmp_path):
    first = Platform(tmp_path / "data")
    from conftest import add_manifest_entry
    first.registry.manifest_path = tmp_path / "manifest.json"
    import sys
    add_manifest_entry(first, "builtin-naive", "1.0.0",
                       [sys.executable, "-m", "castorlite.runners.naive"])
    deploy_hourly(first)
    before = first.scheduler.tick(T0)
    assert len(before) == 1
    first.store.close()

    reopened = Platform(tmp_path / "data", manifest_path=tmp_path / "manifest.json")
    assert reopened.scheduler.tick(T0) == []  # restart does not re-emit


def test_cadence_independence(tmp_path):
    """1-minute and 10-minute tick cadences emit identical (task, due) sets."""
    import sys
    from conftest import add_manifest_entry

    emissions = {}
    for cadence, name in ((60, "a"), (600, "b")):
        p = Platform(tmp_path / name)
        p.registry.manifest_path = tmp_path / f"manifest-{name}.json"
        add_manifest_entry(p, "builtin-naive", "1.0.0",
                           [sys.executable, "-m", "castorlite.runners.naive"])
        deploy_hourly(p)
        out = []
        now = T0
        while now < T0 + 24 * HOUR:
            out.extend((r.task, r.due_time) for r in p.scheduler.tick(now))
            now += cadence
        emissions[name] = out
    assert emissions["a"] == emissions["b"]


def test_weekly_and_hourly_schedules_together(platform):
    platform.semantics.register_entity("S1", "SUBSTATION", 34.9, 33.6)
    platform.semantics.register_signal("ENERGY_LOAD", "kWh", "energy")
    platform.semantics.bind_timeseries("S1", "ENERGY_LOAD")
    platform.registry.register_deployment(alg2_config())
    emitted = []
    now = T0
    while now < T0 + 2 * 86400:
        emitted.extend(platform.scheduler.tick(now))
        now += 600
    trains = [r for r in emitted if r.task == "train"]
    scores = [r for r in emitted if r.task == "score"]
    assert len(trains) == 1 and trains[0].due_time == T0
    assert len(scores) == 48
