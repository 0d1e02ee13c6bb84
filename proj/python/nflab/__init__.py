"""Python face of the nonlocal field laboratory.

Everything substantial lives in the compiled module; this package only
re-exports it under a stable name.
"""

from ._nflab import (
    CheckFailure,
    ConfigError,
    Field,
    Grid,
    Kernel,
    Scenario,
    evolve_scenario,
    lp_distance,
    lp_norm,
    parse_scenario,
    run_experiment,
    run_norms,
    run_validate,
    sup_norm_gap,
    validate_model,
    verify_kernel_bounds,
)

__all__ = [
    "CheckFailure",
    "ConfigError",
    "Field",
    "Grid",
    "Kernel",
    "Scenario",
    "evolve_scenario",
    "lp_distance",
    "lp_norm",
    "parse_scenario",
    "run_experiment",
    "run_norms",
    "run_validate",
    "sup_norm_gap",
    "validate_model",
    "verify_kernel_bounds",
]
