"""Photon-number distributions for coherent light in thermal background.

Single-mode thermal light has geometric photon statistics

    p_th(n) = n_th^n / (n_th + 1)^(n+1) = x^n (1 - x),    x = n_th / (n_th + 1),

coherent (laser) light has Poisson statistics, and their mixture is the
convolution of the two laws.  The convolution has a closed form in terms of
the upper incomplete gamma function with integer shape,

    p(n) = (1 - x) e^(n_p/x - n_p) (x^n / n!) Gamma(n_p/x, n + 1),

which this module evaluates by exact finite sums.  One time bin is treated
as one mode per repetition, so a single (n_p, n_th) pair fully describes a
detection slot.

Also provided: tail probabilities above a photon-number threshold, truncated
PMF construction, and counter-based seeded samplers whose draws are pure
functions of (seed, stream_id, draw_index).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

__all__ = [
    "SourceKind",
    "SourceParams",
    "PhotonPmf",
    "CountSampleStream",
    "PmfTruncationError",
    "thermal_pmf",
    "poisson_pmf",
    "poisson_tail",
    "incomplete_gamma_ratio",
    "mixed_pmf",
    "build_pmf",
    "thermal_tail",
    "mixed_tail",
    "sample_count",
    "sample_counts",
]

# Means above this make exp(-mean) underflow; samplers split Poisson draws
# into chunks instead (Poisson additivity), analytics switch to log space.
_LOG_SPACE_CUTOFF = 700.0
# Direct-recurrence regime bound for Poisson terms.
_RECURRENCE_CUTOFF = 30


class PmfTruncationError(RuntimeError):
    """Truncation bound exceeded the hard cap before reaching tolerance."""


class SourceKind(Enum):
    THERMAL = "thermal"
    POISSON = "poisson"
    MIXED = "mixed"


def _check_mean(value: float, name: str) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0.0:
        raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
    return value


@dataclass(frozen=True)
class SourceParams:
    """Mean photon numbers of the coherent signal and the thermal background.

    ``x`` is the derived thermal ratio n_th / (n_th + 1); the probability
    that a thermal draw reaches at least N photons is x^N.
    """

    n_p_mean: float
    n_th_mean: float
    x: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_p_mean", _check_mean(self.n_p_mean, "n_p_mean"))
        object.__setattr__(self, "n_th_mean", _check_mean(self.n_th_mean, "n_th_mean"))
        object.__setattr__(self, "x", self.n_th_mean / (self.n_th_mean + 1.0))


@dataclass(frozen=True)
class PhotonPmf:
    """Truncated photon-number PMF with explicit residual tail mass."""

    kind: SourceKind
    params: SourceParams
    probs: tuple[float, ...]
    n_max: int
    residual: float


def thermal_pmf(n: int, n_th_mean: float) -> float:
    """Probability of n photons from single-mode thermal light."""
    n = _check_count(n)
    n_th_mean = _check_mean(n_th_mean, "n_th_mean")
    x = n_th_mean / (n_th_mean + 1.0)
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    return x**n * (1.0 - x)


def poisson_pmf(n: int, n_p_mean: float) -> float:
    """Probability of n photons from coherent light with the given mean.

    Uses the recurrence p(n) = p(n-1) * mean / n in the small regime and
    log-space evaluation once mean or n exceeds 30, so large arguments
    neither overflow nor lose the leading digits.
    """
    n = _check_count(n)
    n_p_mean = _check_mean(n_p_mean, "n_p_mean")
    if n_p_mean == 0.0:
        return 1.0 if n == 0 else 0.0
    if n > _RECURRENCE_CUTOFF or n_p_mean > _RECURRENCE_CUTOFF:
        return math.exp(n * math.log(n_p_mean) - n_p_mean - math.lgamma(n + 1))
    p = math.exp(-n_p_mean)
    for k in range(1, n + 1):
        p *= n_p_mean / k
    return p


def poisson_tail(threshold_n: int, n_p_mean: float) -> float:
    """Probability that a Poisson draw is >= threshold_n.

    Whichever side of the threshold carries less mass is the one summed:
    small tails are accumulated upward from the threshold term (full
    relative precision, no 1 - CDF cancellation), large tails as one minus
    the short below-threshold sum.
    """
    threshold_n = _check_threshold(threshold_n)
    n_p_mean = _check_mean(n_p_mean, "n_p_mean")
    if n_p_mean == 0.0:
        return 0.0
    below = incomplete_gamma_ratio(n_p_mean, threshold_n)
    if below < 0.5:
        return 1.0 - below
    term = poisson_pmf(threshold_n, n_p_mean)
    total = term
    n = threshold_n
    # Terms decay at least geometrically once n > mean; cap mirrors build_pmf.
    cap = threshold_n + int(10.0 * n_p_mean) + 200
    while term > 0.0 and n < cap:
        n += 1
        term *= n_p_mean / n
        total += term
        if term < total * 1e-18:
            break
    return min(total, 1.0)


def incomplete_gamma_ratio(y: float, k: int) -> float:
    """Gamma(y, k) / (k-1)!, the normalized upper incomplete gamma.

    Evaluated by the exact finite sum e^(-y) * sum_{m<k} y^m / m! that the
    integer shape admits; equals the probability that a Poisson draw with
    mean y is below k.  Decreasing in y, increasing in k, equals 1 at y = 0.
    """
    y = float(y)
    if not math.isfinite(y) or y < 0.0:
        raise ValueError(f"y must be finite and >= 0, got {y!r}")
    k = int(k)
    if k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    if y > _LOG_SPACE_CUTOFF:
        # e^(-y) underflows; sum term-wise in log space instead.
        log_y = math.log(y)
        return min(
            math.fsum(
                math.exp(m * log_y - y - math.lgamma(m + 1)) for m in range(k)
            ),
            1.0,
        )
    term = math.exp(-y)
    total = term
    for m in range(1, k):
        term *= y / m
        total += term
    return min(total, 1.0)


def mixed_pmf(n: int, params: SourceParams) -> float:
    """Probability of n photons from coherent plus thermal light.

    Closed form (1-x) e^(n_p/x - n_p) x^n Gamma(n_p/x, n+1) / n!, with the
    gamma factor supplied by :func:`incomplete_gamma_ratio`.  The x == 0 and
    n_p == 0 limits reduce to the pure Poisson and pure thermal laws.
    """
    n = _check_count(n)
    x = params.x
    n_p = params.n_p_mean
    if x == 0.0:
        return poisson_pmf(n, n_p)
    if n_p == 0.0:
        return thermal_pmf(n, params.n_th_mean)
    y = n_p / x
    if y > _LOG_SPACE_CUTOFF:
        # The gamma ratio's seed e^(-y) underflows before the compensating
        # exponential factor is applied; evaluate the whole sum in log space.
        log_x = math.log(x)
        log_np = math.log(n_p)
        log_1mx = math.log1p(-x)
        return math.fsum(
            math.exp(log_1mx + (n - m) * log_x + m * log_np - n_p - math.lgamma(m + 1))
            for m in range(n + 1)
        )
    scale = math.exp(y - n_p + n * math.log(x))
    return (1.0 - x) * scale * incomplete_gamma_ratio(y, n + 1)


def thermal_tail(threshold_n: int, n_th_mean: float) -> float:
    """Probability that a thermal draw is >= threshold_n: exactly x^N."""
    threshold_n = _check_threshold(threshold_n)
    n_th_mean = _check_mean(n_th_mean, "n_th_mean")
    x = n_th_mean / (n_th_mean + 1.0)
    return x**threshold_n


def mixed_tail(threshold_n: int, params: SourceParams) -> float:
    """Probability that a mixed-light draw is >= threshold_n.

    Uses the threshold identity

        P(n >= N) = P_poisson(n >= N) + sum_{m<N} p_p(m) x^(N-m),

    an exact regrouping of the incomplete-gamma closed form into positive
    terms, so small tails are not lost to 1 - (almost 1) cancellation.
    """
    threshold_n = _check_threshold(threshold_n)
    x = params.x
    n_p = params.n_p_mean
    if x == 0.0:
        return poisson_tail(threshold_n, n_p)
    total = poisson_tail(threshold_n, n_p)
    for m in range(threshold_n):
        total += poisson_pmf(m, n_p) * x ** (threshold_n - m)
    return min(total, 1.0)


def build_pmf(kind: SourceKind, params: SourceParams, tolerance: float = 1e-12) -> PhotonPmf:
    """Tabulate a PMF out to the smallest n_max whose residual <= tolerance.

    The truncation bound is capped at 10 * (n_p + n_th) + 200; hitting the
    cap raises :class:`PmfTruncationError` rather than returning a PMF that
    silently misses mass.
    """
    tolerance = float(tolerance)
    if not 0.0 < tolerance < 1.0:
        raise ValueError(f"tolerance must be in (0, 1), got {tolerance!r}")
    kind = SourceKind(kind)
    pmf_fn = {
        SourceKind.THERMAL: lambda n: thermal_pmf(n, params.n_th_mean),
        SourceKind.POISSON: lambda n: poisson_pmf(n, params.n_p_mean),
        SourceKind.MIXED: lambda n: mixed_pmf(n, params),
    }[kind]
    cap = int(10.0 * (params.n_p_mean + params.n_th_mean)) + 200
    probs: list[float] = []
    for n in range(cap + 1):
        probs.append(pmf_fn(n))
        if kind is SourceKind.THERMAL:
            residual = params.x ** (n + 1)
        else:
            residual = max(0.0, 1.0 - math.fsum(probs))
        if residual <= tolerance:
            return PhotonPmf(kind, params, tuple(probs), n, residual)
    raise PmfTruncationError(
        f"residual {residual:.3e} still above tolerance {tolerance:.3e} "
        f"at the hard cap n_max = {cap}"
    )


def _check_count(n: int) -> int:
    if n != int(n) or n < 0:
        raise ValueError(f"photon number must be a nonnegative integer, got {n!r}")
    return int(n)


def _check_threshold(threshold_n: int) -> int:
    if threshold_n != int(threshold_n) or threshold_n < 1:
        raise ValueError(f"threshold must be a positive integer, got {threshold_n!r}")
    return int(threshold_n)


# --- seeded counter-based sampling ---
#
# Every uniform is derived by hashing (seed, stream_id, draw_index, lane)
# with a SplitMix64-style avalanche mix, so a draw is a pure function of its
# coordinates: streams can be drawn in any order or in parallel and still
# reproduce bit-identically.

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_MIX_B = np.uint64(0x94D049BB133111EB)
_U53_SCALE = float(2.0**-53)

# Lane tags keep the thermal and Poisson components of one draw independent;
# Poisson chunks (mean split for additivity) get lanes above these.
_LANE_THERMAL = np.uint64(1)
_LANE_POISSON = np.uint64(2)


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX_A
    z = (z ^ (z >> np.uint64(27))) * _MIX_B
    return z ^ (z >> np.uint64(31))


def _uniforms(seed: int, stream_ids: np.ndarray, draw_indices: np.ndarray, lane: np.uint64) -> np.ndarray:
    """Deterministic uniforms in [0, 1) for hashed (seed, stream, index, lane)."""
    with np.errstate(over="ignore"):  # uint64 wraparound is the intended arithmetic
        z = np.full(np.broadcast(stream_ids, draw_indices).shape, np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
        z = _mix64(z + _GOLDEN)
        z = _mix64(z ^ (stream_ids.astype(np.uint64) * _GOLDEN + _GOLDEN))
        z = _mix64(z ^ (draw_indices.astype(np.uint64) * _MIX_A + _GOLDEN))
        z = _mix64(z ^ (lane * _MIX_B + _GOLDEN))
        return (z >> np.uint64(11)).astype(np.float64) * _U53_SCALE


def _thermal_counts(x: float, u: np.ndarray) -> np.ndarray:
    """Geometric-law inversion: count = floor(log(1-u) / log(x))."""
    if x == 0.0:
        return np.zeros(u.shape, dtype=np.int64)
    return np.floor(np.log1p(-u) / math.log(x)).astype(np.int64)


def _poisson_counts_single(
    mean: float, seed: int, stream_ids: np.ndarray, draw_indices: np.ndarray, lane: np.uint64
) -> np.ndarray:
    """CDF inversion for one Poisson component with mean <= the log cutoff."""
    shape = np.broadcast(stream_ids, draw_indices).shape
    if mean == 0.0:
        return np.zeros(shape, dtype=np.int64)
    u = _uniforms(seed, stream_ids, draw_indices, lane)
    counts = np.zeros(shape, dtype=np.int64)
    term = np.full(shape, math.exp(-mean))
    cdf = term.copy()
    cap = int(10.0 * mean) + 200
    for n in range(1, cap + 1):
        pending = u >= cdf
        if not pending.any():
            break
        counts[pending] = n
        term *= mean / n
        cdf += term
    return counts


def _poisson_counts(
    mean: float, seed: int, stream_ids: np.ndarray, draw_indices: np.ndarray
) -> np.ndarray:
    # Split large means into exact Poisson(mean / chunks) summands so the
    # inversion seed exp(-mean) never underflows.
    chunks = max(1, math.ceil(mean / _LOG_SPACE_CUTOFF))
    total = _poisson_counts_single(mean / chunks, seed, stream_ids, draw_indices, _LANE_POISSON)
    for c in range(1, chunks):
        lane = _LANE_POISSON + np.uint64(2 * c)
        total += _poisson_counts_single(mean / chunks, seed, stream_ids, draw_indices, lane)
    return total


def _draw_counts(
    kind: SourceKind,
    params: SourceParams,
    seed: int,
    stream_ids: np.ndarray,
    draw_indices: np.ndarray,
) -> np.ndarray:
    if kind is SourceKind.THERMAL:
        u = _uniforms(seed, stream_ids, draw_indices, _LANE_THERMAL)
        return _thermal_counts(params.x, u)
    if kind is SourceKind.POISSON:
        return _poisson_counts(params.n_p_mean, seed, stream_ids, draw_indices)
    u = _uniforms(seed, stream_ids, draw_indices, _LANE_THERMAL)
    thermal = _thermal_counts(params.x, u)
    return thermal + _poisson_counts(params.n_p_mean, seed, stream_ids, draw_indices)


@dataclass(frozen=True)
class CountSampleStream:
    """Descriptor of one logical stream of photon-count draws.

    Value-like: drawing is a pure function of (stream, draw_index), so the
    same descriptor may be shared across threads or rebuilt from its fields.
    """

    seed: int
    stream_id: int
    kind: SourceKind
    params: SourceParams

    def __post_init__(self) -> None:
        if self.stream_id < 0:
            raise ValueError(f"stream_id must be >= 0, got {self.stream_id}")

    def draw(self, draw_index: int) -> int:
        return sample_count(self, draw_index)

    def draw_many(self, draw_indices: Sequence[int] | np.ndarray) -> np.ndarray:
        return sample_counts(self, draw_indices)


def sample_count(stream: CountSampleStream, draw_index: int) -> int:
    """The photon count of one draw; deterministic per (seed, stream, index)."""
    return int(sample_counts(stream, np.asarray([draw_index]))[0])


def sample_counts(stream: CountSampleStream, draw_indices: Sequence[int] | np.ndarray) -> np.ndarray:
    """Vectorized :func:`sample_count` over an array of draw indices."""
    indices = np.atleast_1d(np.asarray(draw_indices))
    if indices.size and indices.min() < 0:
        raise ValueError("draw indices must be >= 0")
    sids = np.asarray(stream.stream_id, dtype=np.uint64)
    return _draw_counts(stream.kind, stream.params, stream.seed, sids, indices)
