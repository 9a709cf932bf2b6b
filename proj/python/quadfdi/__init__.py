"""Quadcopter closed-loop simulator with GPS false-data injection and detectors."""

from ._core import (
    DivergentBound,
    Error,
    InsufficientSamples,
    IoError,
    MismatchedRuns,
    NoDecay,
    NonFiniteState,
    ParseError,
    ReplayMismatch,
    ScenarioConfig,
    ValidationError,
    deviation,
    fake_replay,
    ies_fit,
    min_effective_step,
    monte_carlo,
    run_scenario,
    stealth_bound,
)

__all__ = [
    "DivergentBound",
    "Error",
    "InsufficientSamples",
    "IoError",
    "MismatchedRuns",
    "NoDecay",
    "NonFiniteState",
    "ParseError",
    "ReplayMismatch",
    "ScenarioConfig",
    "ValidationError",
    "deviation",
    "fake_replay",
    "ies_fit",
    "min_effective_step",
    "monte_carlo",
    "run_scenario",
    "stealth_bound",
]
