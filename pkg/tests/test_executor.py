import base64
import json
import sys
import time

import pytest

from castorlite.errors import (
    MalformedResult,
    RunnerCrashed,
    RunnerTimeout,
    UnknownModel,
    UnresolvableImplementation,
)
from castorlite.executor import JobResult, JobSpec, invoke_runner, job_metrics
from castorlite.registry import RunnerSpec
from castorlite.scale import write_stub_runner
from castorlite.scheduler import JobRequest
from castorlite.server import ServiceHandle
from castorlite.timeutil import format_rfc3339
from conftest import T0, HOUR, add_manifest_entry, alg2_config, make_pool


def write_script(tmp_path, name, body):
    path = tmp_path / name
    path.write_text("#!/bin/sh\n" + body)
    path.chmod(0o755)
    return path


def stub_request(model_id, i=0):
    return JobRequest(
        model_id=model_id,
        task="score",
        due_time=T0 + i * HOUR,
        entity_name="S1",
        signal_name="ENERGY_LOAD",
        user_parameters={},
    )


def deploy_stub(bound_context, tmp_path, sleep_s=0.2):
    platform, _ = bound_context
    stub = write_stub_runner(tmp_path, sleep_s)
    add_manifest_entry(platform, "stub", "1.0.0", ["/bin/sh", str(stub)])
    model_id = platform.registry.register_deployment(
        alg2_config(dist="stub", module="StubModel")
    )
    return platform, model_id


# --- wire protocol plumbing ---

def test_job_result_parse_variants():
    ok = JobResult.parse(json.dumps({
        "status": "ok",
        "model_blob": base64.b64encode(b"blob").decode(),
        "metadata": {"n_rows": 3},
    }))
    assert ok.model_blob == b"blob" and ok.metadata == {"n_rows": 3}
    scored = JobResult.parse(json.dumps({
        "status": "ok",
        "points": [["2019-03-01T01:00:00+00:00", 1.5], ["2019-03-01T02:00:00+00:00", 2.5]],
    }))
    assert scored.points == [(T0 + HOUR, 1.5), (T0 + 2 * HOUR, 2.5)]
    err = JobResult.parse(json.dumps({"status": "error", "message": "boom"}))
    assert err.status == "error" and err.message == "boom"


def test_job_result_rejects_garbage():
    with pytest.raises(MalformedResult):
        JobResult.parse("not json")
    with pytest.raises(MalformedResult):
        JobResult.parse(json.dumps({"status": "maybe"}))
    with pytest.raises(MalformedResult):
        JobResult.parse(json.dumps({
            "status": "ok",
            "points": [["2019-03-01T02:00:00+00:00", 1], ["2019-03-01T01:00:00+00:00", 2]],
        }))


def dummy_spec():
    return JobSpec(task="score", context={}, model_id="m", model_version=None,
                   user_params={}, service_url="http://x", job_id="j")


def test_invoke_runner_crash(tmp_path):
    script = write_script(tmp_path, "crash.sh", "exit 1\n")
    with pytest.raises(RunnerCrashed):
        invoke_runner(RunnerSpec("/bin/sh", [str(script)]), dummy_spec())


def test_invoke_runner_timeout(tmp_path):
    script = write_script(tmp_path, "sleepy.sh", "sleep 30\n")
    with pytest.raises(RunnerTimeout):
        invoke_runner(RunnerSpec("/bin/sh", [str(script)]), dummy_spec(), timeout_s=0.5)


def test_invoke_runner_malformed_output(tmp_path):
    script = write_script(tmp_path, "noise.sh", "cat > /dev/null; echo banana\n")
    with pytest.raises(MalformedResult):
        invoke_runner(RunnerSpec("/bin/sh", [str(script)]), dummy_spec())


def test_invoke_runner_error_result_on_nonzero_exit(tmp_path):
    script = write_script(
        tmp_path, "err.sh",
        "cat > /dev/null; printf '%s' '{\"status\":\"error\",\"message\":\"no data\"}'; exit 1\n",
    )
    result = invoke_runner(RunnerSpec("/bin/sh", [str(script)]), dummy_spec())
    assert result.status == "error" and result.message == "no data"


# --- pool semantics ---

def test_pool_wall_time_bound(bound_context, tmp_path):
    platform, model_id = deploy_stub(bound_context, tmp_path, sleep_s=0.2)
    pool = make_pool(platform, max_parallel=10)
    pool.start()
    t0 = time.monotonic()
    ids = [pool.submit(stub_request(model_id, i)) for i in range(20)]
    pool.wait_idle()
    wall = time.monotonic() - t0
    pool.shutdown()
    assert 0.4 <= wall < 1.2  # ceil(20/10) * 0.2s plus bounded overhead
    assert all(pool.get_record(j).outcome == "ok" for j in ids)


def test_pool_respects_bound(bound_context, tmp_path):
    platform, model_id = deploy_stub(bound_context, tmp_path, sleep_s=0.1)
    pool = make_pool(platform, max_parallel=3)
    pool.start()
    for i in range(12):
        pool.submit(stub_request(model_id, i))
    pool.wait_idle()
    pool.shutdown()
    assert pool.peak_live <= 3


def test_pool_sequential_when_parallel_one(bound_context, tmp_path):
    platform, model_id = deploy_stub(bound_context, tmp_path, sleep_s=0.05)
    pool = make_pool(platform, max_parallel=1)
    pool.start()
    ids = [pool.submit(stub_request(model_id, i)) for i in range(5)]
    pool.wait_idle()
    pool.shutdown()
    finishes = [pool.get_record(j).finished_at for j in ids]
    assert finishes == sorted(finishes)
    starts = [pool.get_record(j).started_at for j in ids]
    for prev_finish, next_start in zip(finishes, starts[1:]):
        assert next_start >= prev_finish - 1e-6


def test_submit_unknown_model(bound_context):
    platform, _ = bound_context
    pool = make_pool(platform)
    with pytest.raises(UnknownModel):
        pool.submit(stub_request("m-missing"))


def test_submit_unresolvable_implementation(bound_context, tmp_path):
    platform, _ = bound_context
    model_id = platform.registry.register_deployment(alg2_config())
    platform.registry.manifest_path.write_text("{}")  # implementation vanished
    pool = make_pool(platform)
    with pytest.raises(UnresolvableImplementation):
        pool.submit(stub_request(model_id))


def test_crashing_runner_isolated(bound_context, tmp_path):
    platform, model_id = deploy_stub(bound_context, tmp_path, sleep_s=0.05)
    crash = write_script(tmp_path, "crash.sh", "exit 1\n")
    add_manifest_entry(platform, "crash", "1.0.0", ["/bin/sh", str(crash)])
    bad_id = platform.registry.register_deployment(
        alg2_config(dist="crash", module="CrashModel")
    )
    pool = make_pool(platform, max_parallel=2)
    pool.start()
    good = [pool.submit(stub_request(model_id, i)) for i in range(3)]
    bad = pool.submit(stub_request(bad_id, 9))
    pool.wait_idle()
    pool.shutdown()
    assert pool.get_record(bad).outcome == "failed"
    assert all(pool.get_record(j).outcome == "ok" for j in good)
    assert platform.forecasts.count_rows() == 0  # crash persisted nothing


def test_timeout_outcome(bound_context, tmp_path):
    platform, _ = bound_context
    sleepy = write_script(tmp_path, "sleepy.sh", "sleep 30\n")
    add_manifest_entry(platform, "sleepy", "1.0.0", ["/bin/sh", str(sleepy)])
    model_id = platform.registry.register_deployment(
        alg2_config(dist="sleepy", module="SleepyModel")
    )
    pool = make_pool(platform, max_parallel=1, timeout_s=0.5)
    pool.start()
    job_id = pool.submit(stub_request(model_id))
    pool.wait_idle()
    pool.shutdown()
    assert pool.get_record(job_id).outcome == "timeout"


# --- metrics ---

def test_job_metrics_mean(bound_context):
    platform, _ = bound_context
    with platform.store.write() as conn:
        for i, d in enumerate((10.0, 20.0)):
            conn.execute(
                "INSERT INTO job_records (job_id, model_id, task, submitted_at, "
                "started_at, finished_at, outcome) VALUES (?, 'm', 'score', 0, 0, ?, 'ok')",
                (f"j{i}", d),
            )
    metrics = job_metrics(platform.store)
    assert metrics["count"] == 2
    assert metrics["mean_duration"] == pytest.approx(15.0)


def test_job_metrics_empty(platform):
    assert job_metrics(platform.store) == {"count": 0}


def test_job_metrics_against_configured_sleep(bound_context, tmp_path):
    platform, model_id = deploy_stub(bound_context, tmp_path, sleep_s=0.1)
    pool = make_pool(platform, max_parallel=5)
    pool.start()
    for i in range(20):
        pool.submit(stub_request(model_id, i))
    pool.wait_idle()
    pool.shutdown()
    metrics = job_metrics(platform.store, task="score", outcome="ok")
    assert metrics["count"] == 20
    assert 0.1 <= metrics["mean_duration"] < 0.25


# --- builtin naive runner end to end ---

def naive_setup(bound_context):
    platform, sid = bound_context
    platform.timeseries.ingest(
        sid, [(T0 - 48 * HOUR + i * HOUR, 7.3) for i in range(49)]
    )
    model_id = platform.registry.register_deployment(alg2_config(frequency="1H"))
    return platform, model_id


def test_naive_runner_score_persists_flat_forecast(bound_context):
    platform, model_id = naive_setup(bound_context)
    with ServiceHandle(platform) as service:
        pool = make_pool(platform, service_url=service.base_url, max_parallel=2)
        pool.start()
        job_id = pool.submit(stub_request(model_id))
        pool.wait_idle()
        pool.shutdown()
    assert pool.get_record(job_id).outcome == "ok"
    rows = platform.forecasts.get_forecasts(
        "S1", "ENERGY_LOAD", T0, T0 + 25 * HOUR, model_id
    )
    assert len(rows) == 24
    assert all(v == 7.3 for _, v, _, _ in rows)
    assert [t for t, *_ in rows] == [T0 + (k + 1) * HOUR for k in range(24)]


def test_naive_runner_train_saves_version(bound_context):
    platform, model_id = naive_setup(bound_context)
    request = JobRequest(model_id, "train", T0, "S1", "ENERGY_LOAD", {})
    with ServiceHandle(platform) as service:
        pool = make_pool(platform, service_url=service.base_url)
        pool.start()
        job_id = pool.submit(request)
        pool.wait_idle()
        pool.shutdown()
    assert pool.get_record(job_id).outcome == "ok"
    version = platform.registry.get_model_version(model_id, "latest")
    assert version.version == 1
    assert json.loads(version.blob) == {"last_value": 7.3}
    assert version.metadata["train_time"] == format_rfc3339(T0)
    assert "training_duration_s" in version.metadata


def test_naive_runner_frequency_15t(bound_context):
    platform, model_id = naive_setup(bound_context)
    request = JobRequest(model_id, "score", T0, "S1", "ENERGY_LOAD",
                         {"frequency": "15T", "horizon": "24H"})
    with ServiceHandle(platform) as service:
        pool = make_pool(platform, service_url=service.base_url)
        pool.start()
        pool.submit(request)
        pool.wait_idle()
        pool.shutdown()
    rows = platform.forecasts.get_forecasts(
        "S1", "ENERGY_LOAD", T0, T0 + 25 * HOUR, model_id
    )
    assert len(rows) == 96  # 24h x 4 per hour


def test_naive_runner_no_data(bound_context):
    platform, _ = bound_context
    model_id = platform.registry.register_deployment(alg2_config())
    with ServiceHandle(platform) as service:
        pool = make_pool(platform, service_url=service.base_url)
        pool.start()
        job_id = pool.submit(stub_request(model_id))
        pool.wait_idle()
        pool.shutdown()
    record = pool.get_record(job_id)
    assert record.outcome == "failed"
    assert "NoData" in record.message
