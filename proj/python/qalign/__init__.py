"""Python bindings for the qalign C++ library.

Functions taking ``overrides`` accept a list of ``"block.key=value"``
strings applied on top of the default configuration.
"""

from ._qalign import (
    AlignmentEnv,
    ConfigError,
    DomainError,
    NumericError,
    PairingError,
    StateError,
    VersionError,
    biphoton_wavefunction,
    decision_threshold,
    evaluate_checkpoint,
    exact_auc,
    optimal_temperature,
    refractive_index,
    resolved_config,
    roc_curve,
    run_heuristic,
    run_heuristic_trials,
    temperature_sweep,
    train,
    true_rate,
    w_statistic,
)

__all__ = [
    "AlignmentEnv",
    "ConfigError",
    "DomainError",
    "NumericError",
    "PairingError",
    "StateError",
    "VersionError",
    "biphoton_wavefunction",
    "decision_threshold",
    "evaluate_checkpoint",
    "exact_auc",
    "optimal_temperature",
    "refractive_index",
    "resolved_config",
    "roc_curve",
    "run_heuristic",
    "run_heuristic_trials",
    "temperature_sweep",
    "train",
    "true_rate",
    "w_statistic",
]
