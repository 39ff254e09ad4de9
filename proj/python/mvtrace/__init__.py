"""Python bindings for the mvtrace C++ library."""

from ._mvtrace import (
    ConfigError,
    Error,
    __version__,
    fit_trace_regression,
    generate,
    inspect,
    make_folds,
    mean_squared_error,
    mesh_laplacian,
    prox_group,
    r_squared,
    read_mvrl,
    run,
    set_log_level,
    significance_map,
    write_mvrl,
)

__all__ = [
    "ConfigError",
    "Error",
    "__version__",
    "fit_trace_regression",
    "generate",
    "inspect",
    "make_folds",
    "mean_squared_error",
    "mesh_laplacian",
    "prox_group",
    "r_squared",
    "read_mvrl",
    "run",
    "set_log_level",
    "significance_map",
    "write_mvrl",
]
