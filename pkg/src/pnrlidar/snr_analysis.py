"""SNR of threshold detection versus intensity detection.

For a coherent signal of mean n_p buried in thermal background of mean n_th,
intensity detection has

    SNR_c = (n_p + n_th) / n_th,

while a detector that fires only when the photon count reaches N has

    SNR_q = P_mixed(count >= N) / x^N,    x = n_th / (n_th + 1),

the exceedance probability of the signal-plus-noise law over that of noise
alone.  SNR_q is monotone increasing in both n_p and N; whether it beats
SNR_c depends on (n_p, n_th, N).  This module evaluates both closed forms,
their analytic derivative and threshold-step identities, and maps the
advantage region: ratio sweeps over signal grids, the signal mean that
maximizes the ratio at fixed noise (golden-section refinement), and the
ratio == 1 boundary in the (n_th, n_p) plane (bisection).

Zero thermal noise is a domain error throughout: the intensity SNR divides
by n_th, and the daylight regime this targets is noise-dominated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .photon_stats import SourceParams, mixed_tail, poisson_pmf, poisson_tail

__all__ = [
    "ZeroNoiseError",
    "SearchError",
    "SnrReport",
    "OptimumPoint",
    "BoundaryCurve",
    "SweepPoint",
    "classical_snr",
    "quantum_snr",
    "snr_ratio",
    "snr_report",
    "quantum_snr_derivative",
    "threshold_gap",
    "sweep_ratio",
    "find_optimum",
    "find_boundary",
    "boundary_knee",
    "log_grid",
]

# Search and root-finding tolerances; module-wide so tables are reproducible.
OPTIMUM_RELATIVE_TOL = 1e-6
OPTIMUM_BRACKET = (1e-3, 1e3)
OPTIMUM_BRACKET_POINTS = 200
BOUNDARY_ABS_TOL = 1e-6
BOUNDARY_RATIO_TOL = 1e-5
BOUNDARY_SCAN_RANGE = (1e-4, 1e4)
BOUNDARY_SCAN_POINTS = 300

_GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0


class ZeroNoiseError(ValueError):
    """Raised when n_th == 0: the SNR comparison needs a noise floor."""


class SearchError(RuntimeError):
    """Raised when a 1-D search finds no interior optimum in its bracket."""


@dataclass(frozen=True)
class SnrReport:
    """Classical and per-threshold quantum SNR, plus their ratios."""

    params: SourceParams
    classical: float
    quantum: dict[int, float]
    ratio: dict[int, float]


@dataclass(frozen=True)
class OptimumPoint:
    """Signal mean that maximizes the SNR ratio at fixed noise and threshold."""

    threshold_n: int
    n_th_mean: float
    best_n_p_mean: float
    best_ratio: float


@dataclass(frozen=True)
class BoundaryCurve:
    """Locus of ratio == 1 points bounding the threshold-advantage region.

    ``points`` holds (n_th_mean, n_p_mean) pairs, one per grid noise level
    with a crossing; the region below each point has ratio > 1.  Noise
    levels without a crossing are listed in ``no_crossing`` with the scanned
    ratio's sign ("above" if the ratio stayed above 1 everywhere, "below"
    otherwise).  ``multiple_crossings`` flags noise levels where the scan
    saw more than one sign change; the largest-n_p crossing is the one kept.
    """

    threshold_n: int
    points: tuple[tuple[float, float], ...]
    tolerance: float = BOUNDARY_RATIO_TOL
    no_crossing: tuple[tuple[float, str], ...] = ()
    multiple_crossings: tuple[float, ...] = ()


def _check_params(params: SourceParams) -> SourceParams:
    if params.n_th_mean == 0.0:
        raise ZeroNoiseError("n_th_mean must be > 0 for SNR analysis")
    return params


def classical_snr(params: SourceParams) -> float:
    """Intensity-detection SNR: (n_p + n_th) / n_th."""
    _check_params(params)
    return (params.n_p_mean + params.n_th_mean) / params.n_th_mean


def quantum_snr(params: SourceParams, threshold_n: int) -> float:
    """Threshold-detection SNR at threshold N: mixed exceedance over x^N.

    The numerator is the closed-form mixed tail (positive finite sum), so
    the value is exact at n_p == 0 (SNR_q == 1) and free of cancellation
    for deep thresholds.
    """
    _check_params(params)
    threshold_n = int(threshold_n)
    if threshold_n < 1:
        raise ValueError(f"threshold must be >= 1, got {threshold_n}")
    return mixed_tail(threshold_n, params) / params.x**threshold_n


def snr_ratio(params: SourceParams, threshold_n: int) -> float:
    """quantum_snr / classical_snr; > 1 where thresholding wins."""
    return quantum_snr(params, threshold_n) / classical_snr(params)


def snr_report(params: SourceParams, thresholds: Sequence[int]) -> SnrReport:
    """Evaluate classical and quantum SNR at each threshold."""
    classical = classical_snr(params)
    quantum = {int(n): quantum_snr(params, n) for n in thresholds}
    ratio = {n: q / classical for n, q in quantum.items()}
    return SnrReport(params, classical, quantum, ratio)


def quantum_snr_derivative(params: SourceParams, threshold_n: int) -> float:
    """d(quantum_snr)/d(n_p) at fixed noise and threshold; strictly positive.

    Closed form (1/x - 1) e^(n_p/x - n_p) Gamma(n_p/x, N) / (N-1)!, computed
    as the rescaled sum (1/x - 1) sum_{m<N} p_p(m) x^(-m) so the exponential
    factor never overflows.
    """
    _check_params(params)
    threshold_n = int(threshold_n)
    if threshold_n < 1:
        raise ValueError(f"threshold must be >= 1, got {threshold_n}")
    x = params.x
    total = 0.0
    for m in range(threshold_n):
        total += poisson_pmf(m, params.n_p_mean) * x ** (-m)
    return (1.0 / x - 1.0) * total


def threshold_gap(params: SourceParams, threshold_n: int) -> float:
    """quantum_snr(N+1) - quantum_snr(N) via the threshold-step identity.

    Equals (1 - x) / x^(N+1) * sum_{n>=N} p_p(n+1); zero only at n_p == 0.
    """
    _check_params(params)
    threshold_n = int(threshold_n)
    if threshold_n < 1:
        raise ValueError(f"threshold must be >= 1, got {threshold_n}")
    x = params.x
    return (1.0 - x) / x ** (threshold_n + 1) * poisson_tail(threshold_n + 1, params.n_p_mean)


@dataclass(frozen=True)
class SweepPoint:
    n_p_mean: float
    threshold_n: int
    ratio: float


def sweep_ratio(
    n_th_mean: float, thresholds: Sequence[int], n_p_grid: Sequence[float]
) -> list[SweepPoint]:
    """SNR ratio over a signal-mean grid, one row per (grid point, threshold)."""
    grid = [float(v) for v in n_p_grid]
    if not grid:
        raise ValueError("n_p_grid must be nonempty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("n_p_grid must be strictly increasing")
    rows = []
    for threshold_n in thresholds:
        for n_p in grid:
            params = SourceParams(n_p, n_th_mean)
            rows.append(SweepPoint(n_p, int(threshold_n), snr_ratio(params, threshold_n)))
    return rows


def log_grid(lo: float, hi: float, points: int) -> list[float]:
    """Logarithmically spaced grid, endpoints included."""
    if not (0.0 < lo < hi) or points < 2:
        raise ValueError("need 0 < lo < hi and at least 2 points")
    step = (math.log(hi) - math.log(lo)) / (points - 1)
    return [math.exp(math.log(lo) + i * step) for i in range(points)]


def find_optimum(
    n_th_mean: float,
    threshold_n: int,
    bracket: tuple[float, float] = OPTIMUM_BRACKET,
    bracket_points: int = OPTIMUM_BRACKET_POINTS,
    relative_tol: float = OPTIMUM_RELATIVE_TOL,
) -> OptimumPoint:
    """Signal mean maximizing the SNR ratio at fixed noise and threshold.

    Scans a log-spaced bracket for the global maximum, then refines with
    golden-section search in log(n_p) to the requested relative tolerance.
    A maximum on the bracket edge means no interior optimum: SearchError.
    """
    if n_th_mean <= 0.0:
        raise ZeroNoiseError("n_th_mean must be > 0 for SNR analysis")

    def ratio_at(log_np: float) -> float:
        return snr_ratio(SourceParams(math.exp(log_np), n_th_mean), threshold_n)

    grid = log_grid(bracket[0], bracket[1], bracket_points)
    values = [ratio_at(math.log(g)) for g in grid]
    best = max(range(len(grid)), key=values.__getitem__)
    if best == 0 or best == len(grid) - 1:
        raise SearchError(
            f"no interior ratio maximum for N={threshold_n}, n_th={n_th_mean} "
            f"in bracket {bracket}"
        )

    # Golden-section on the log axis: absolute tolerance there is relative
    # tolerance in n_p.
    a = math.log(grid[best - 1])
    b = math.log(grid[best + 1])
    c = b - (b - a) / _GOLDEN_RATIO
    d = a + (b - a) / _GOLDEN_RATIO
    fc, fd = ratio_at(c), ratio_at(d)
    while (b - a) > relative_tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - (b - a) / _GOLDEN_RATIO
            fc = ratio_at(c)
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) / _GOLDEN_RATIO
            fd = ratio_at(d)
    log_best = (a + b) / 2.0
    best_n_p = math.exp(log_best)
    return OptimumPoint(int(threshold_n), float(n_th_mean), best_n_p, ratio_at(log_best))


def _bisect_ratio_crossing(
    f: Callable[[float], float], lo: float, hi: float, abs_tol: float, ratio_tol: float
) -> float | None:
    """Root of f (a ratio minus 1) in [lo, hi] with f(lo), f(hi) of opposite sign."""
    flo = f(lo)
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if (hi - lo) <= abs_tol and abs(fmid) <= ratio_tol:
            return mid
        if (flo < 0.0) == (fmid < 0.0):
            lo, flo = mid, fmid
        else:
            hi = mid
        if hi == lo:
            break
    return None


def find_boundary(
    threshold_n: int,
    n_th_grid: Sequence[float],
    scan_range: tuple[float, float] = BOUNDARY_SCAN_RANGE,
    scan_points: int = BOUNDARY_SCAN_POINTS,
    abs_tol: float = BOUNDARY_ABS_TOL,
    ratio_tol: float = BOUNDARY_RATIO_TOL,
) -> BoundaryCurve:
    """Map the ratio == 1 boundary over a grid of noise means.

    For each n_th the signal axis is scanned on a log grid and the
    largest-n_p sign change of (ratio - 1) is bisected; that crossing bounds
    the advantage region from above, matching a region that sits below the
    curve.  Grid points with no sign change are reported rather than
    guessed, and points with several crossings are flagged.
    """
    points: list[tuple[float, float]] = []
    no_crossing: list[tuple[float, str]] = []
    multiple: list[float] = []
    scan = log_grid(scan_range[0], scan_range[1], scan_points)
    for n_th in n_th_grid:
        n_th = float(n_th)
        if n_th <= 0.0:
            raise ZeroNoiseError("n_th grid values must be > 0")

        def excess(n_p: float) -> float:
            return snr_ratio(SourceParams(n_p, n_th), threshold_n) - 1.0

        values = [excess(v) for v in scan]
        sign_changes = [
            i
            for i in range(len(scan) - 1)
            if (values[i] > 0.0) != (values[i + 1] > 0.0)
        ]
        if not sign_changes:
            side = "above" if values[len(values) // 2] > 0.0 else "below"
            no_crossing.append((n_th, side))
            continue
        if len(sign_changes) > 1:
            multiple.append(n_th)
        i = sign_changes[-1]
        root = _bisect_ratio_crossing(excess, scan[i], scan[i + 1], abs_tol, ratio_tol)
        if root is None:
            no_crossing.append((n_th, "unresolved"))
            continue
        points.append((n_th, root))
    return BoundaryCurve(
        int(threshold_n),
        tuple(points),
        ratio_tol,
        tuple(no_crossing),
        tuple(multiple),
    )


def boundary_knee(curve: BoundaryCurve) -> float:
    """Noise mean at the curve's corner, where d(n_p)/d(n_th) reaches -1.

    Both axes carry the same units (mean photons), so the point of unit
    descent is the natural elbow of the advantage boundary: to its left the
    admissible signal shrinks faster than the noise grows, to its right
    slower.  Slopes come from central differences over the curve's grid,
    with linear interpolation between the bracketing points.
    """
    pts = curve.points
    if len(pts) < 3:
        raise ValueError("need at least 3 boundary points to locate a knee")
    slopes = []
    for i in range(1, len(pts) - 1):
        (t_lo, p_lo), (t_hi, p_hi) = pts[i - 1], pts[i + 1]
        slopes.append((pts[i][0], (p_hi - p_lo) / (t_hi - t_lo)))
    if slopes[0][1] >= -1.0:
        return slopes[0][0]
    for (t_a, s_a), (t_b, s_b) in zip(slopes, slopes[1:]):
        if s_b >= -1.0:
            return t_a + (-1.0 - s_a) * (t_b - t_a) / (s_b - s_a)
    raise SearchError(
        f"boundary slope never reaches -1 on the grid for N={curve.threshold_n}; "
        "extend the noise grid to the right"
    )
