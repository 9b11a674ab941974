"""Itô differentials at an instant: simulation, window classifiers, exact
coefficient algebra, manifold pushforwards and instantaneous portfolios."""

__version__ = "0.1.0"

from . import asymptotics, differential, errors, manifold, market, paths, variation  # noqa: E402
from .asymptotics import LadderConfig, Verdict, classify_order  # noqa: E402
from .differential import ItoDifferential, test_zero  # noqa: E402
from .paths import PathBundle, ProcessKind, ProcessSpec, TimeGrid, simulate, simulate_brownian  # noqa: E402

__all__ = [
    "asymptotics", "differential", "errors", "manifold", "market", "paths", "variation",
    "LadderConfig", "Verdict", "classify_order", "ItoDifferential", "test_zero",
    "PathBundle", "ProcessKind", "ProcessSpec", "TimeGrid", "simulate", "simulate_brownian",
]
