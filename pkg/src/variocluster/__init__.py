"""Variogram-based clustering of spatially dependent functional data.

Smooths georeferenced time series into basis-coefficient form, estimates
trace- and centered variograms over distance bins, and partitions the curves
into clusters each represented by a fitted parametric variogram prototype.
Includes a separable-covariance Gaussian random field simulator for
benchmark studies and a CLI for the end-to-end pipeline.
"""

from .basis import BSplineBasis, FourierBasis, gram_matrix
from .cluster import (
    VariogramKMeans,
    allocate_curves,
    cluster_trace_variograms,
    clustering_criterion,
    fit_cluster_prototypes,
    resolve_h_star,
)
from .metrics import rand_index
from .model_selection import select_family, select_n_clusters
from .simulate import (
    BenchmarkSpec,
    SeparableCovariance,
    SimulatedDataset,
    SimulationError,
    make_benchmark,
    simulate_benchmark,
    simulate_field,
    spatial_correlation,
    temporal_correlation,
)
from .smoothing import (
    BasisSmoother,
    FunctionalDataset,
    SampledSeries,
    SpatialTrendRemover,
    detrend,
    l2_distance_sq,
    select_basis_dimension,
    smooth_series,
)
from .variogram import (
    EmpiricalVariogram,
    FitError,
    InsufficientLagsError,
    LagStructure,
    NoPairsError,
    VariogramModel,
    build_lag_structure,
    centered_variogram,
    fit_variogram,
    trace_variogram,
)

__version__ = "0.1.0"

__all__ = [
    "BSplineBasis",
    "BasisSmoother",
    "BenchmarkSpec",
    "EmpiricalVariogram",
    "FitError",
    "FourierBasis",
    "FunctionalDataset",
    "InsufficientLagsError",
    "LagStructure",
    "NoPairsError",
    "SampledSeries",
    "SeparableCovariance",
    "SimulatedDataset",
    "SimulationError",
    "SpatialTrendRemover",
    "VariogramKMeans",
    "VariogramModel",
    "allocate_curves",
    "build_lag_structure",
    "centered_variogram",
    "cluster_trace_variograms",
    "clustering_criterion",
    "detrend",
    "fit_cluster_prototypes",
    "fit_variogram",
    "gram_matrix",
    "l2_distance_sq",
    "make_benchmark",
    "rand_index",
    "resolve_h_star",
    "select_basis_dimension",
    "select_family",
    "select_n_clusters",
    "simulate_benchmark",
    "simulate_field",
    "smooth_series",
    "spatial_correlation",
    "temporal_correlation",
    "trace_variogram",
]
