"""Base class every model implementation extends."""
from __future__ import annotations

from .client import ServiceClient
from .timeparse import duration_seconds, frequency_seconds, parse_rfc3339


class ModelInterface:
    """Four-function model contract: load, transform, train, score.

    The constructor captures the job context from the wire-protocol spec;
    `load` pulls whatever the model needs from the service, `transform`
    derives features, `train` returns a JSON-serializable fitted object,
    and `score` returns a time-ordered list of (timestamp, value) points.
    """

    #: when True the adapter fetches the pinned model version before scoring
    requires_trained_model = True

    def __init__(self, spec: dict, client: ServiceClient):
        self.context = spec["context"]
        self.task = spec["task"]
        self.model_id = spec["model_id"]
        self.model_version = spec.get("model_version")
        self.user_params = dict(spec.get("user_params") or {})
        self.client = client
        self.due_time = parse_rfc3339(self.user_params["due_time"])
        self.data: list[tuple[float, float]] = []
        self.n_rows = 0

    # --- convenience accessors over the resolved context ---

    @property
    def entity_name(self) -> str:
        return self.context["entity"]["name"]

    @property
    def signal_name(self) -> str:
        return self.context["signal"]["name"]

    @property
    def coordinates(self) -> tuple[float | None, float | None]:
        e = self.context["entity"]
        return e.get("latitude"), e.get("longitude")

    def param_duration(self, key: str, default: str) -> float:
        return duration_seconds(str(self.user_params.get(key, default)))

    def param_frequency(self, key: str = "frequency", default: str = "1H") -> float:
        return frequency_seconds(str(self.user_params.get(key, default)))

    # --- the contract ---

    def load(self) -> None:
        raise NotImplementedError

    def transform(self) -> None:
        """Optional feature derivation between load and train/score."""

    def train(self) -> dict:
        raise NotImplementedError

    def score(self, fitted: dict | None) -> list[tuple[float, float]]:
        raise NotImplementedError
