"""Authoring kit for forecasting-model runners.

A model subclasses :class:`ModelInterface` (load / transform / train /
score) and ships as a subprocess speaking the platform's JSON-over-stdio
wire protocol; :func:`run_model` is the adapter that bridges the two.
Three reference models are included: a persistence baseline, a linear
regression with weather/lag/calendar features, and a power-to-energy
integration transform.
"""
from .client import ServiceClient, ServiceError
from .errors import (
    InsufficientHistory,
    ModelError,
    NoData,
    UnknownSourceContext,
)
from .interface import ModelInterface
from .adapter import ProtocolAdapter, run_model
from .models import (
    MODEL_CLASSES,
    EnergyIntegrationModel,
    LinearRegressionModel,
    PersistenceModel,
)

__all__ = [
    "ModelInterface",
    "ProtocolAdapter",
    "run_model",
    "ServiceClient",
    "ServiceError",
    "ModelError",
    "NoData",
    "InsufficientHistory",
    "UnknownSourceContext",
    "PersistenceModel",
    "LinearRegressionModel",
    "EnergyIntegrationModel",
    "MODEL_CLASSES",
]
