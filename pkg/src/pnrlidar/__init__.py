"""Photon-number threshold detection: statistics, SNR analysis, simulation."""

from .photon_stats import (
    CountSampleStream,
    PhotonPmf,
    PmfTruncationError,
    SourceKind,
    SourceParams,
    build_pmf,
    incomplete_gamma_ratio,
    mixed_pmf,
    mixed_tail,
    poisson_pmf,
    poisson_tail,
    sample_count,
    sample_counts,
    thermal_pmf,
    thermal_tail,
)
from .snr_analysis import (
    BoundaryCurve,
    OptimumPoint,
    SearchError,
    SnrReport,
    SweepPoint,
    ZeroNoiseError,
    classical_snr,
    find_boundary,
    find_optimum,
    log_grid,
    quantum_snr,
    quantum_snr_derivative,
    snr_ratio,
    snr_report,
    sweep_ratio,
    threshold_gap,
)
from .rangefinder_sim import (
    DegenerateNoiseError,
    RatioEstimate,
    SimConfig,
    SimResult,
    UndefinedRatioError,
    estimate_ratio,
    expected_result,
    normalize,
    run_simulation,
)

__version__ = "0.1.0"
