"""Time-binned Monte Carlo rangefinder: intensity vs threshold detection.

A detection frame is split into time bins; every bin receives thermal noise
photons, and each simulated target adds Poisson signal photons to its bin.
One repetition draws one photon count per bin (one mode per bin per
repetition).  Two detection channels accumulate per bin over repetitions:

  intensity  - the summed photon count (ideal photon-number readout);
  threshold  - for each configured N, how many repetitions reached >= N.

Both channels are reported raw and normalized so that the average over the
non-target (noise) bins is one; target bins then read directly in units of
the noise floor, and the threshold/intensity quotient at a target bin is a
Monte Carlo estimate of the corresponding SNR quotient.

Draws are counter-based: the stream identity is (repetition, bin, slot)
with the noise and signal draws on separate slots, so results are
bit-reproducible for a given seed regardless of evaluation order, and
adding or removing a target never perturbs the noise realization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .photon_stats import SourceKind, SourceParams, _draw_counts
from .snr_analysis import ZeroNoiseError, classical_snr, quantum_snr

__all__ = [
    "DegenerateNoiseError",
    "UndefinedRatioError",
    "SimConfig",
    "SimResult",
    "RatioEstimate",
    "ExpectedResult",
    "run_simulation",
    "normalize",
    "estimate_ratio",
    "expected_result",
]

_NOISE_SLOT = 0
_SIGNAL_SLOT = 1


class DegenerateNoiseError(ValueError):
    """Noise-bin average is zero, so normalization is undefined."""


class UndefinedRatioError(ValueError):
    """Ratio requested at a bin whose intensity channel is zero."""


@dataclass(frozen=True)
class SimConfig:
    """Scenario description: bins, noise level, targets, detection settings."""

    repetitions: int
    seed: int
    num_bins: int = 50
    noise_mean: float = 1.0
    targets: tuple[tuple[int, float], ...] = ()
    thresholds: tuple[int, ...] = (2, 5)

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", tuple((int(b), float(m)) for b, m in self.targets))
        object.__setattr__(self, "thresholds", tuple(int(n) for n in self.thresholds))
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.num_bins < 1:
            raise ValueError(f"num_bins must be >= 1, got {self.num_bins}")
        if not math.isfinite(self.noise_mean) or self.noise_mean < 0.0:
            raise ValueError(f"noise_mean must be finite and >= 0, got {self.noise_mean}")
        bins = [b for b, _ in self.targets]
        if len(set(bins)) != len(bins):
            raise ValueError("target bin indices must be distinct")
        for b, mean in self.targets:
            if not 0 <= b < self.num_bins:
                raise ValueError(f"target bin {b} out of range 0..{self.num_bins - 1}")
            if not math.isfinite(mean) or mean <= 0.0:
                raise ValueError(f"target signal mean must be > 0, got {mean}")
        if len(set(self.thresholds)) != len(self.thresholds):
            raise ValueError("thresholds must be distinct")
        if any(n < 1 for n in self.thresholds):
            raise ValueError("thresholds must be >= 1")

    @property
    def target_map(self) -> dict[int, float]:
        return dict(self.targets)

    @property
    def noise_bins(self) -> tuple[int, ...]:
        occupied = {b for b, _ in self.targets}
        return tuple(b for b in range(self.num_bins) if b not in occupied)


@dataclass(frozen=True)
class SimResult:
    """Raw and noise-normalized per-bin accumulations of one simulation."""

    config: SimConfig
    intensity_raw: np.ndarray
    intensity_sq_raw: np.ndarray
    threshold_raw: dict[int, np.ndarray]
    intensity_norm: np.ndarray
    threshold_norm: dict[int, np.ndarray]
    noise_bins: tuple[int, ...]


@dataclass(frozen=True)
class RatioEstimate:
    """Threshold/intensity quotient at one bin, with per-channel errors.

    Standard errors are one sigma in normalized units: binomial for the
    threshold channel, per-repetition count variance for intensity; the
    (much smaller) uncertainty of the noise-bin normalizer is not folded in.
    """

    bin_index: int
    threshold_n: int
    ratio: float
    intensity_value: float
    threshold_value: float
    intensity_se: float
    threshold_se: float


@dataclass(frozen=True)
class ExpectedResult:
    """Analytic normalized expectations for every bin of a config."""

    config: SimConfig
    intensity: np.ndarray
    threshold: dict[int, np.ndarray]


def _stream_ids(config: SimConfig, bin_index: int, slot: int) -> np.ndarray:
    reps = np.arange(config.repetitions, dtype=np.uint64)
    per_rep = np.uint64(2 * config.num_bins)
    return reps * per_rep + np.uint64(2 * bin_index + slot)


def run_simulation(config: SimConfig) -> SimResult:
    """Draw all repetitions, accumulate both channels, and normalize."""
    noise = SourceParams(0.0, config.noise_mean)
    target_map = config.target_map
    zero_index = np.zeros(1, dtype=np.uint64)

    intensity_raw = np.zeros(config.num_bins, dtype=np.int64)
    intensity_sq_raw = np.zeros(config.num_bins, dtype=np.int64)
    threshold_raw = {n: np.zeros(config.num_bins, dtype=np.int64) for n in config.thresholds}

    for b in range(config.num_bins):
        counts = _draw_counts(
            SourceKind.THERMAL, noise, config.seed, _stream_ids(config, b, _NOISE_SLOT), zero_index
        )
        if b in target_map:
            signal = SourceParams(target_map[b], 0.0)
            counts = counts + _draw_counts(
                SourceKind.POISSON, signal, config.seed, _stream_ids(config, b, _SIGNAL_SLOT), zero_index
            )
        intensity_raw[b] = counts.sum()
        intensity_sq_raw[b] = (counts * counts).sum()
        for n in config.thresholds:
            threshold_raw[n][b] = int((counts >= n).sum())

    noise_bins = config.noise_bins
    intensity_norm = normalize(intensity_raw, noise_bins)
    threshold_norm = {n: normalize(raw, noise_bins) for n, raw in threshold_raw.items()}
    return SimResult(
        config,
        intensity_raw,
        intensity_sq_raw,
        threshold_raw,
        intensity_norm,
        threshold_norm,
        noise_bins,
    )


def normalize(raw: np.ndarray, noise_bins: Sequence[int]) -> np.ndarray:
    """Divide a per-bin array by its average over the noise bins."""
    raw = np.asarray(raw)
    noise_bins = list(noise_bins)
    if not noise_bins:
        raise ValueError("noise_bins must be nonempty")
    floor = float(raw[noise_bins].mean())
    if floor <= 0.0:
        raise DegenerateNoiseError(
            "noise-bin average is zero; raise noise_mean, repetitions, or lower thresholds"
        )
    return raw / floor


def estimate_ratio(result: SimResult, bin_index: int, threshold_n: int) -> RatioEstimate:
    """Threshold/intensity quotient at a bin, with standard errors."""
    config = result.config
    if not 0 <= bin_index < config.num_bins:
        raise ValueError(f"bin {bin_index} out of range 0..{config.num_bins - 1}")
    if threshold_n not in result.threshold_raw:
        raise ValueError(f"threshold {threshold_n} not simulated (have {sorted(result.threshold_raw)})")
    reps = config.repetitions
    intensity_value = float(result.intensity_norm[bin_index])
    threshold_value = float(result.threshold_norm[threshold_n][bin_index])
    if intensity_value == 0.0:
        raise UndefinedRatioError(f"intensity channel is zero at bin {bin_index}")

    p_hat = result.threshold_raw[threshold_n][bin_index] / reps
    p_floor = float(result.threshold_raw[threshold_n][list(result.noise_bins)].mean()) / reps
    threshold_se = math.sqrt(p_hat * (1.0 - p_hat) / reps) / p_floor

    mean_count = result.intensity_raw[bin_index] / reps
    mean_sq = result.intensity_sq_raw[bin_index] / reps
    var = max(0.0, mean_sq - mean_count**2)
    if reps > 1:
        var *= reps / (reps - 1)
    count_floor = float(result.intensity_raw[list(result.noise_bins)].mean()) / reps
    intensity_se = math.sqrt(var / reps) / count_floor

    return RatioEstimate(
        bin_index,
        int(threshold_n),
        threshold_value / intensity_value,
        intensity_value,
        threshold_value,
        intensity_se,
        threshold_se,
    )


def expected_result(config: SimConfig) -> ExpectedResult:
    """Analytic normalized expectations: the infinite-repetition limit.

    Intensity at a target bin tends to (n_p + n_th) / n_th and threshold
    channels to the threshold-detection SNR; noise bins tend to one.
    """
    if config.noise_mean == 0.0:
        raise ZeroNoiseError("expected_result needs noise_mean > 0")
    intensity = np.ones(config.num_bins)
    threshold = {n: np.ones(config.num_bins) for n in config.thresholds}
    for b, signal_mean in config.targets:
        params = SourceParams(signal_mean, config.noise_mean)
        intensity[b] = classical_snr(params)
        for n in config.thresholds:
            threshold[n][b] = quantum_snr(params, n)
    return ExpectedResult(config, intensity, threshold)
