"""Circular regression on functional covariates.

Curves are 2-d arrays with one row per curve, sampled on a common grid
(uniform on [0, 1] unless ``grid`` is given). Angles are radians.
"""

from ._funcirc import (
    DegenerateDirection,
    EmptyNeighborhood,
    FormatError,
    FuncircError,
    IncompatibleGrids,
    InvalidArgument,
    Model,
    NoFeasibleBandwidth,
    UnsupportedKernel,
    angle_to_day,
    case_error,
    circ_mean,
    day_to_angle,
    distance_matrix,
    fit,
    loocv_score,
    regression_truth,
    run_scenario,
    sample_von_mises,
    select_bandwidth,
    select_neighbors,
    simulate_curves,
    verify_variance_identity,
)

__all__ = [
    "DegenerateDirection",
    "EmptyNeighborhood",
    "FormatError",
    "FuncircError",
    "IncompatibleGrids",
    "InvalidArgument",
    "Model",
    "NoFeasibleBandwidth",
    "UnsupportedKernel",
    "angle_to_day",
    "case_error",
    "circ_mean",
    "day_to_angle",
    "distance_matrix",
    "fit",
    "fit_cv",
    "loocv_score",
    "regression_truth",
    "run_scenario",
    "sample_von_mises",
    "select_bandwidth",
    "select_neighbors",
    "simulate_curves",
    "verify_variance_identity",
]


def fit_cv(curves, responses, kernel="quadratic", mode="nw", grid=None, **grid_params):
    """Fit with the smoothing parameter chosen by leave-one-out cross-validation."""
    if mode == "knn":
        k, _, _ = select_neighbors(curves, responses, grid=grid)
        return fit(curves, responses, kernel=kernel, neighbors=k, grid=grid)
    h, _, _ = select_bandwidth(curves, responses, kernel=kernel, grid=grid, **grid_params)
    return fit(curves, responses, kernel=kernel, bandwidth=h, grid=grid)
