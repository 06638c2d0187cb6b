"""Gaussian probability-path flow matching for latent-space forecasting."""

from ._core import (
    LinearCodec,
    PathSchedule,
    Rng,
    SingularScheduleError,
    __version__,
    alt_sde_check,
    compute_metrics,
    continuity_residual,
    flow_map_error,
    run_cli,
    sde_moment_check,
    vf_variance_compare,
)

__all__ = [
    "LinearCodec",
    "PathSchedule",
    "Rng",
    "SingularScheduleError",
    "__version__",
    "alt_sde_check",
    "compute_metrics",
    "continuity_residual",
    "flow_map_error",
    "run_cli",
    "sde_moment_check",
    "vf_variance_compare",
]
