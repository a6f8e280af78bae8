"""Model deployments, implementation resolution, versions and ranking.

Deployment configurations use the exact JSON field names of the deployment
document format: context, model_name, dist_name, dist_ver, module,
training_deployment, scoring_deployment, user_parameters.  Implementation
resolution goes through a local manifest file mapping (dist_name, dist_ver)
to a runner command line; the registered module name is appended as the
final argument.
"""
from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    BlobTooLarge,
    IncompleteRanking,
    MalformedConfig,
    MalformedSchedule,
    NoVersions,
    UnknownModel,
    UnknownVersion,
    UnresolvableImplementation,
)
from .semantics import SemanticStore
from .store import Store
from .timeutil import format_rfc3339, parse_repeat_every, parse_rfc3339

DEFAULT_BLOB_CAP = 64 * 1024 * 1024


@dataclass(frozen=True)
class ScheduleSpec:
    start_time: float
    repeat_every: float | None = None  # seconds; None = run once

    @classmethod
    def from_json(cls, doc: dict, path: str) -> "ScheduleSpec":
        if not isinstance(doc, dict) or "time" not in doc:
            raise MalformedConfig(f"{path}: expected an object with a 'time' field")
        try:
            start = parse_rfc3339(doc["time"])
        except (ValueError, TypeError) as exc:
            raise MalformedConfig(f"{path}.time: {exc}") from exc
        repeat = None
        if doc.get("repeatEvery") is not None:
            try:
                repeat = parse_repeat_every(doc["repeatEvery"])
            except MalformedSchedule as exc:
                raise MalformedConfig(f"{path}.repeatEvery: {exc}") from exc
        return cls(start, repeat)

    def to_json(self) -> dict:
        doc = {"time": format_rfc3339(self.start_time)}
        text = self._repeat_text
        if text is None and self.repeat_every is not None:
            text = _repeat_text_for(self.repeat_every)
        if text is not None:
            doc["repeatEvery"] = text
        return doc

    # Original repeatEvery text is kept alongside so serialization round-trips
    # bit-compatibly ("1_week" does not become "7_days").
    _repeat_text: str | None = field(default=None, compare=False)


@dataclass
class DeploymentConfig:
    model_name: str
    entity_name: str
    signal_name: str
    dist_name: str
    dist_ver: str
    module: str
    training_schedule: ScheduleSpec | None
    scoring_schedule: ScheduleSpec | None
    user_parameters: dict
    model_id: str | None = None

    @classmethod
    def from_json(cls, doc: dict) -> "DeploymentConfig":
        if not isinstance(doc, dict):
            raise MalformedConfig("config must be a JSON object")
        ctx = doc.get("context")
        if not isinstance(ctx, dict) or "entity" not in ctx or "signal" not in ctx:
            raise MalformedConfig("context: expected {'entity': ..., 'signal': ...}")
        for key in ("model_name", "dist_name", "dist_ver", "module"):
            if not isinstance(doc.get(key), str) or not doc[key]:
                raise MalformedConfig(f"{key}: expected a non-empty string")
        training = scoring = None
        if doc.get("training_deployment") is not None:
            training = _schedule_from_json(doc["training_deployment"], "training_deployment")
        if doc.get("scoring_deployment") is not None:
            scoring = _schedule_from_json(doc["scoring_deployment"], "scoring_deployment")
        if training is None and scoring is None:
            raise MalformedConfig(
                "at least one of training_deployment, scoring_deployment is required"
            )
        params = doc.get("user_parameters", {})
        if not isinstance(params, dict):
            raise MalformedConfig("user_parameters: expected a JSON object")
        return cls(
            model_name=doc["model_name"],
            entity_name=str(ctx["entity"]),
            signal_name=str(ctx["signal"]),
            dist_name=doc["dist_name"],
            dist_ver=doc["dist_ver"],
            module=doc["module"],
            training_schedule=training,
            scoring_schedule=scoring,
            user_parameters=params,
            model_id=doc.get("model_id"),
        )

    def to_json(self) -> dict:
        doc: dict = {
            "context": {"entity": self.entity_name, "signal": self.signal_name},
            "model_name": self.model_name,
            "dist_name": self.dist_name,
            "dist_ver": self.dist_ver,
            "module": self.module,
        }
        if self.training_schedule is not None:
            doc["training_deployment"] = self.training_schedule.to_json()
        if self.scoring_schedule is not None:
            doc["scoring_deployment"] = self.scoring_schedule.to_json()
        doc["user_parameters"] = self.user_parameters
        if self.model_id is not None:
            doc["model_id"] = self.model_id
        return doc


def _repeat_text_for(seconds: float) -> str:
    for unit, size in (("weeks", 604800), ("days", 86400), ("hours", 3600), ("minutes", 60)):
        if seconds % size == 0:
            return f"{int(seconds // size)}_{unit}"
    return f"{int(seconds // 60)}_minutes"


def _schedule_from_json(doc: dict, path: str) -> ScheduleSpec:
    spec = ScheduleSpec.from_json(doc, path)
    text = doc.get("repeatEvery") if isinstance(doc, dict) else None
    object.__setattr__(spec, "_repeat_text", text)
    return spec


@dataclass(frozen=True)
class RunnerSpec:
    command: str
    args: list[str]

    @property
    def argv(self) -> list[str]:
        return [self.command, *self.args]


@dataclass(frozen=True)
class ModelVersion:
    model_id: str
    version: int
    blob: bytes
    metadata: dict


class ModelRegistry:
    def __init__(
        self,
        store: Store,
        semantics: SemanticStore,
        manifest_path: str | Path | None = None,
        blob_cap: int = DEFAULT_BLOB_CAP,
    ):
        self._store = store
        self._semantics = semantics
        self.manifest_path = Path(manifest_path) if manifest_path else None
        self.blob_cap = blob_cap

    # --- implementation resolution ---

    def _manifest(self) -> dict:
        if self.manifest_path is None or not self.manifest_path.exists():
            return {}
        with open(self.manifest_path) as f:
            return json.load(f)

    def resolve_implementation(self, dist_name: str, dist_ver: str, module: str) -> RunnerSpec:
        entry = self._manifest().get(dist_name, {}).get(dist_ver)
        if not entry:
            raise UnresolvableImplementation(
                f"no manifest entry for ({dist_name!r}, {dist_ver!r})"
            )
        return RunnerSpec(command=entry[0], args=[*entry[1:], module])

    # --- deployments ---

    def register_deployment(self, config_json: dict) -> str:
        config = DeploymentConfig.from_json(config_json)
        ctx = self._semantics.require_bound_context(config.entity_name, config.signal_name)
        self.resolve_implementation(config.dist_name, config.dist_ver, config.module)
        model_id = "m-" + uuid.uuid4().hex[:12]
        config.model_id = model_id
        seq = self._store.next_counter("deployment_seq")
        with self._store.write() as conn:
            conn.execute(
                "INSERT INTO deployments (model_id, entity_id, signal_id, config, seq) "
                "VALUES (?, ?, ?, ?, ?)",
                (model_id, ctx.entity.id, ctx.signal.id, json.dumps(config.to_json()), seq),
            )
        return model_id

    def get_deployment(self, model_id: str) -> DeploymentConfig:
        with self._store.connect() as conn:
            row = conn.execute(
                "SELECT config FROM deployments WHERE model_id = ?", (model_id,)
            ).fetchone()
        if row is None:
            raise UnknownModel(f"no deployment with model_id {model_id!r}")
        return DeploymentConfig.from_json(json.loads(row["config"]))

    def list_deployments(self) -> list[DeploymentConfig]:
        with self._store.connect() as conn:
            rows = conn.execute("SELECT config FROM deployments ORDER BY seq").fetchall()
        return [DeploymentConfig.from_json(json.loads(r["config"])) for r in rows]

    # --- model versions ---

    def save_model_version(self, model_id: str, blob: bytes, metadata: dict) -> int:
        self.get_deployment(model_id)
        if len(blob) > self.blob_cap:
            raise BlobTooLarge(f"blob of {len(blob)} bytes exceeds cap {self.blob_cap}")
        with self._store.write() as conn:
            row = conn.execute(
                "SELECT COALESCE(MAX(version), 0) AS v FROM model_versions WHERE model_id = ?",
                (model_id,),
            ).fetchone()
            version = row["v"] + 1
            conn.execute(
                "INSERT INTO model_versions (model_id, version, blob, metadata) "
                "VALUES (?, ?, ?, ?)",
                (model_id, version, blob, json.dumps(metadata)),
            )
        return version

    def get_model_version(self, model_id: str, selector: int | str = "latest") -> ModelVersion:
        self.get_deployment(model_id)
        with self._store.connect() as conn:
            if selector == "latest":
                row = conn.execute(
                    "SELECT * FROM model_versions WHERE model_id = ? "
                    "ORDER BY version DESC LIMIT 1",
                    (model_id,),
                ).fetchone()
                if row is None:
                    raise NoVersions(f"model {model_id!r} has no trained versions")
            else:
                version = int(selector)
                row = conn.execute(
                    "SELECT * FROM model_versions WHERE model_id = ? AND version = ?",
                    (model_id, version),
                ).fetchone()
                if row is None:
                    has_any = conn.execute(
                        "SELECT 1 FROM model_versions WHERE model_id = ? LIMIT 1", (model_id,)
                    ).fetchone()
                    if has_any is None:
                        raise NoVersions(f"model {model_id!r} has no trained versions")
                    raise UnknownVersion(f"model {model_id!r} has no version {version}")
        return ModelVersion(
            model_id=model_id,
            version=row["version"],
            blob=row["blob"],
            metadata=json.loads(row["metadata"]),
        )

    def latest_version_number(self, model_id: str) -> int | None:
        self.get_deployment(model_id)
        with self._store.connect() as conn:
            row = conn.execute(
                "SELECT MAX(version) AS v FROM model_versions WHERE model_id = ?", (model_id,)
            ).fetchone()
        return row["v"]

    # --- ranking ---

    def set_ranking(self, entity_name: str, signal_name: str, ordered_model_ids: list[str]) -> None:
        ctx = self._semantics.require_bound_context(entity_name, signal_name)
        deployed = {
            m for m, _ in self._semantics.list_deployed_models(entity_name, signal_name)
        }
        if set(ordered_model_ids) != deployed or len(ordered_model_ids) != len(deployed):
            raise IncompleteRanking(
                "ranking must be a permutation of all deployed model ids for the context"
            )
        with self._store.write() as conn:
            conn.execute(
                "INSERT INTO rankings (entity_id, signal_id, model_ids) VALUES (?, ?, ?) "
                "ON CONFLICT(entity_id, signal_id) DO UPDATE SET model_ids = excluded.model_ids",
                (ctx.entity.id, ctx.signal.id, json.dumps(ordered_model_ids)),
            )

    def best_model(self, entity_name: str, signal_name: str) -> str:
        ranked = self._semantics.list_deployed_models(entity_name, signal_name)
        if not ranked:
            raise UnknownModel(f"no deployments for context ({entity_name}, {signal_name})")
        return ranked[0][0]
