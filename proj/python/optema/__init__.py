"""OptEMA optimizers, test problems and trajectory diagnostics."""

from ._optema import (
    CheckReport,
    CheckViolation,
    ConfigError,
    DiagnosticError,
    DivergenceError,
    Hyperparameters,
    InputError,
    Optimizer,
    Problem,
    RateFit,
    StepError,
    StepRecord,
    builtin_problems,
    check_gradient_domination,
    check_log_sum_bounds,
    corrected_adagrad_norm,
    fit_rate,
    make_problem,
    noise_sweep,
    run_experiment,
    run_invariant_suite,
    spike_experiment,
    trace_checks,
)

__all__ = [
    "CheckReport",
    "CheckViolation",
    "ConfigError",
    "DiagnosticError",
    "DivergenceError",
    "Hyperparameters",
    "InputError",
    "Optimizer",
    "Problem",
    "RateFit",
    "StepError",
    "StepRecord",
    "builtin_problems",
    "check_gradient_domination",
    "check_log_sum_bounds",
    "corrected_adagrad_norm",
    "fit_rate",
    "make_problem",
    "noise_sweep",
    "run_experiment",
    "run_invariant_suite",
    "spike_experiment",
    "trace_checks",
]
