"""Directional stationarity checks for multicomposite problems."""

from ._dstat import (
    FormatError,
    InfeasiblePointError,
    Point,
    Problem,
    __version__,
    check,
    dd_F,
    dd_Psi,
    dd_Theta,
    ex2_problem,
    lift_direction,
    penalty_config,
    relu_gate_problem,
    repro,
    repro_names,
    rnn_desk_problem,
    rnn_thresholds,
    solve,
    tangent_membership,
    thresholds,
)

__all__ = [
    "FormatError",
    "InfeasiblePointError",
    "Point",
    "Problem",
    "__version__",
    "check",
    "dd_F",
    "dd_Psi",
    "dd_Theta",
    "ex2_problem",
    "lift_direction",
    "penalty_config",
    "relu_gate_problem",
    "repro",
    "repro_names",
    "rnn_desk_problem",
    "rnn_thresholds",
    "solve",
    "tangent_membership",
    "thresholds",
]
