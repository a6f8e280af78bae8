"""castorlite: a desk-scale manager for fleets of time-series forecasting models.

Sensor series live under a semantic context graph; model deployments are
registered against contexts, scheduled for training/scoring, executed in a
bounded parallel pool of out-of-process runners, and every trained version
and issued forecast is persisted for full lineage.
"""
from .platform import Platform

__all__ = ["Platform"]
__version__ = "0.1.0"
