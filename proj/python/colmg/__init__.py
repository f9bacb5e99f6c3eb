"""Collective multigrid for optimal control under uncertainty."""

from ._colmg import (
    ConfigError,
    ConvergenceError,
    check_config,
    empirical_cvar,
    free_nodes,
    g_eps,
    g_eps_prime,
    g_eps_second,
    model_r,
    run,
    smoother_spectrum,
    spectrum_mismatch,
    two_level_spectrum,
)

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "check_config",
    "empirical_cvar",
    "free_nodes",
    "g_eps",
    "g_eps_prime",
    "g_eps_second",
    "model_r",
    "run",
    "smoother_spectrum",
    "spectrum_mismatch",
    "two_level_spectrum",
]
