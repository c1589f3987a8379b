"""Spectral change point detection for high-dimensional time series.

Detects multiple change points in the spectral density of a
piecewise-stationary multivariate series and reports, per change point,
which Fourier frequencies and which component series were activated.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .bench import (
    adjusted_rand_index,
    cp_series_rank,
    projection_alignment,
    segments_from_cps,
    simulate_dgp1,
    simulate_dgp2,
    simulate_factor,
)
from .cusum import CusumTensor, cusum_tensor, cusum_vector
from .detect import (
    ChangePoint,
    DetectionReport,
    Interval,
    ProjectedSeries,
    aggregate_thresholded,
    detect_changepoints,
    independent_projection,
    interval_projections,
    project_spectra,
    sample_intervals,
)
from .ingest import (
    BlockPlan,
    SeriesMatrix,
    center_series,
    load_csv,
    normal_quantile_transform,
    partition_blocks,
)
from .sparse_decomp import (
    DecompSettings,
    ProjectionVector,
    decompose,
    init_projection,
    truncate_top_k,
)
from .spectral import (
    FreqGrid,
    SpectralTensor,
    Taper,
    dump_tensor_csv,
    frequency_split,
    make_grid,
    make_taper,
    periodogram_tensor,
    tapered_dft,
)
from .tune import (
    DetectionConfig,
    bootstrap_threshold,
    build_tensor,
    default_config,
    estimate_sparsity,
    resolve_config,
)

__all__ = [
    "BACKEND",
    "BlockPlan",
    "ChangePoint",
    "CusumTensor",
    "DecompSettings",
    "DetectionConfig",
    "DetectionReport",
    "FreqGrid",
    "Interval",
    "ProjectedSeries",
    "ProjectionVector",
    "SeriesMatrix",
    "SpectralTensor",
    "Taper",
    "adjusted_rand_index",
    "aggregate_thresholded",
    "bootstrap_threshold",
    "build_tensor",
    "center_series",
    "cp_series_rank",
    "cusum_tensor",
    "cusum_vector",
    "decompose",
    "default_config",
    "detect_changepoints",
    "dump_tensor_csv",
    "estimate_sparsity",
    "frequency_split",
    "independent_projection",
    "init_projection",
    "interval_projections",
    "load_csv",
    "make_grid",
    "make_taper",
    "normal_quantile_transform",
    "partition_blocks",
    "periodogram_tensor",
    "project_spectra",
    "projection_alignment",
    "resolve_config",
    "sample_intervals",
    "segments_from_cps",
    "simulate_dgp1",
    "simulate_dgp2",
    "simulate_factor",
    "tapered_dft",
    "truncate_top_k",
]
