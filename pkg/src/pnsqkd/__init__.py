"""Decoy-pulse BB84 under a photon-number-splitting attack.

Analytic event-by-event impairment enumeration of the Alice -> Eve -> Bob
link, an event-by-event Monte Carlo oracle, and design sweeps.
"""

__version__ = "0.1.0"

from .config import (
    LinkGeometry,
    ReceiverParams,
    Scenario,
    ScenarioError,
    SourceParams,
    baseline,
    load_scenario,
    validate,
)
from .enumeration import Evaluation, Metrics, evaluate, metrics

__all__ = [
    "LinkGeometry",
    "ReceiverParams",
    "Scenario",
    "ScenarioError",
    "SourceParams",
    "baseline",
    "load_scenario",
    "validate",
    "Evaluation",
    "Metrics",
    "evaluate",
    "metrics",
]
