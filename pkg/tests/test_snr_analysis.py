"""SNR formula checks against independent oracles and qualitative structure."""

import math

import pytest

from pnrlidar.photon_stats import SourceParams, mixed_pmf, thermal_pmf
from pnrlidar.snr_analysis import (
    SearchError,
    ZeroNoiseError,
    boundary_knee,
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

SIGNAL_GRID = (0.0, 0.5, 1.0, 3.0, 10.0)
NOISE_GRID = (0.2, 1.0, 5.0)


def central_diff(f, a, h=1e-5):
    return (f(a + h) - f(a - h)) / (2.0 * h)


def forward_diff(f, a, h=1e-5):
    # second-order one-sided stencil for the n_p = 0 edge
    return (-3.0 * f(a) + 4.0 * f(a + h) - f(a + 2.0 * h)) / (2.0 * h)


class TestClassicalSnr:
    def test_values(self):
        assert classical_snr(SourceParams(10.0, 1.0)) == 11.0
        assert classical_snr(SourceParams(1.0, 2.0)) == 1.5

    def test_no_signal_is_unity(self):
        for n_th in NOISE_GRID:
            assert classical_snr(SourceParams(0.0, n_th)) == 1.0

    def test_zero_noise_rejected(self):
        with pytest.raises(ZeroNoiseError):
            classical_snr(SourceParams(1.0, 0.0))


class TestQuantumSnr:
    def test_no_signal_is_exactly_unity(self):
        for n_th in NOISE_GRID:
            for big_n in range(1, 8):
                assert quantum_snr(SourceParams(0.0, n_th), big_n) == 1.0

    def test_single_threshold_closed_form(self):
        expected = (1.0 - 0.5 * math.exp(-1.0)) / 0.5
        assert quantum_snr(SourceParams(1.0, 1.0), 1) == pytest.approx(expected, rel=1e-14)

    def test_strong_target_ratio_matches_reported_value(self):
        value = quantum_snr(SourceParams(10.0, 1.0), 5)
        assert value / 11.0 == pytest.approx(2.86, abs=0.05)

    def test_zero_noise_rejected(self):
        with pytest.raises(ZeroNoiseError):
            quantum_snr(SourceParams(1.0, 0.0), 2)

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            quantum_snr(SourceParams(1.0, 1.0), 0)

    @pytest.mark.parametrize("n_th", NOISE_GRID)
    @pytest.mark.parametrize("n_p", SIGNAL_GRID)
    def test_at_least_unity_with_equality_only_at_zero_signal(self, n_p, n_th):
        for big_n in range(1, 11):
            value = quantum_snr(SourceParams(n_p, n_th), big_n)
            if n_p == 0.0:
                assert value == 1.0
            else:
                assert value > 1.0

    @pytest.mark.parametrize("n_th", NOISE_GRID)
    @pytest.mark.parametrize("n_p", SIGNAL_GRID)
    def test_monotone_in_signal(self, n_p, n_th):
        for big_n in range(1, 11):
            lo = quantum_snr(SourceParams(n_p, n_th), big_n)
            hi = quantum_snr(SourceParams(n_p + 0.1, n_th), big_n)
            assert hi > lo

    @pytest.mark.parametrize("n_th", NOISE_GRID)
    @pytest.mark.parametrize("n_p", SIGNAL_GRID[1:])
    def test_monotone_in_threshold(self, n_p, n_th):
        values = [quantum_snr(SourceParams(n_p, n_th), n) for n in range(1, 11)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_oracle_equivalence_spot_check(self):
        # closed form vs truncated PMF tail quotient
        params = SourceParams(3.0, 1.0)
        for big_n in (1, 3, 5, 10):
            mixed = math.fsum(mixed_pmf(n, params) for n in range(big_n, 200))
            thermal = math.fsum(thermal_pmf(n, 1.0) for n in range(big_n, 200))
            assert quantum_snr(params, big_n) == pytest.approx(mixed / thermal, rel=1e-9)


class TestSnrRatio:
    def test_no_signal_unity(self):
        assert snr_ratio(SourceParams(0.0, 1.0), 3) == 1.0

    def test_reported_weak_target_values(self):
        assert snr_ratio(SourceParams(0.5, 1.0), 2) == pytest.approx(1.05, abs=0.02)
        assert snr_ratio(SourceParams(0.5, 1.0), 5) == pytest.approx(1.10, abs=0.02)

    def test_report_structure(self):
        report = snr_report(SourceParams(2.0, 1.0), [2, 3, 5])
        assert report.classical == 3.0
        assert set(report.quantum) == {2, 3, 5}
        assert report.quantum[3] > report.quantum[2]
        for n, q in report.quantum.items():
            assert report.ratio[n] == q / report.classical

    @pytest.mark.parametrize("big_n", [2, 3, 4, 5])
    def test_high_noise_low_signal_advantage(self, big_n):
        for factor in (2.0, 3.0, 5.0, 10.0):
            for n_p in (0.001, 0.01, 0.05, 0.1):
                params = SourceParams(n_p, factor * big_n)
                assert snr_ratio(params, big_n) > 1.0


class TestDerivative:
    @pytest.mark.parametrize("n_th", NOISE_GRID)
    @pytest.mark.parametrize("n_p", SIGNAL_GRID)
    def test_matches_finite_differences(self, n_p, n_th):
        for big_n in (1, 2, 5, 10):
            analytic = quantum_snr_derivative(SourceParams(n_p, n_th), big_n)
            f = lambda a: quantum_snr(SourceParams(a, n_th), big_n)
            numeric = forward_diff(f, 0.0) if n_p == 0.0 else central_diff(f, n_p)
            assert analytic == pytest.approx(numeric, rel=1e-4)
            assert analytic > 0.0

    def test_zero_signal_value_is_inverse_noise(self):
        # Gamma(0, N)/(N-1)! = 1, so the slope at n_p = 0 is (1 - x)/x
        for n_th in (0.5, 1.0, 4.0):
            for big_n in (1, 2, 6):
                assert quantum_snr_derivative(SourceParams(0.0, n_th), big_n) == pytest.approx(
                    1.0 / n_th, rel=1e-12
                )

    def test_zero_noise_rejected(self):
        with pytest.raises(ZeroNoiseError):
            quantum_snr_derivative(SourceParams(1.0, 0.0), 2)


class TestThresholdGap:
    def test_zero_at_no_signal(self):
        for big_n in (1, 4, 9):
            assert threshold_gap(SourceParams(0.0, 1.0), big_n) == 0.0

    @pytest.mark.parametrize("n_th", NOISE_GRID)
    @pytest.mark.parametrize("n_p", SIGNAL_GRID[1:])
    def test_positive_and_equals_direct_difference(self, n_p, n_th):
        params = SourceParams(n_p, n_th)
        for big_n in range(1, 10):
            gap = threshold_gap(params, big_n)
            direct = quantum_snr(params, big_n + 1) - quantum_snr(params, big_n)
            assert gap > 0.0
            assert gap == pytest.approx(direct, abs=1e-8)

    def test_specific_case(self):
        params = SourceParams(3.0, 1.0)
        direct = quantum_snr(params, 3) - quantum_snr(params, 2)
        assert threshold_gap(params, 2) == pytest.approx(direct, abs=1e-8)


class TestSweep:
    def test_single_point_grid_reproduces_ratio(self):
        rows = sweep_ratio(1.0, [4], [2.5])
        assert len(rows) == 1
        assert rows[0].ratio == snr_ratio(SourceParams(2.5, 1.0), 4)

    def test_row_count(self):
        rows = sweep_ratio(1.0, [2, 3, 4], log_grid(0.1, 10.0, 25))
        assert len(rows) == 75

    @pytest.mark.parametrize("big_n", [2, 3, 4, 5])
    def test_single_interior_maximum(self, big_n):
        grid = log_grid(0.01, 100.0, 120)
        values = [p.ratio for p in sweep_ratio(1.0, [big_n], grid)]
        rises = [i for i in range(1, len(values) - 1)
                 if values[i] > values[i - 1] and values[i] > values[i + 1]]
        assert len(rises) == 1
        assert 0 < rises[0] < len(values) - 1

    def test_crosses_unity_from_above_at_boundary(self):
        curve = find_boundary(5, [1.0])
        (n_th, n_p), = curve.points
        assert snr_ratio(SourceParams(n_p * 0.9, n_th), 5) > 1.0
        assert snr_ratio(SourceParams(n_p * 1.1, n_th), 5) < 1.0

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            sweep_ratio(1.0, [2], [])
        with pytest.raises(ValueError):
            sweep_ratio(1.0, [2], [1.0, 0.5])


class TestFindOptimum:
    def test_optimum_near_threshold(self):
        for big_n in range(2, 9):
            opt = find_optimum(1.0, big_n)
            assert big_n / 2.0 <= opt.best_n_p_mean <= 2.0 * big_n

    def test_local_optimality(self):
        opt = find_optimum(1.0, 4)
        for bump in (0.99, 1.01):
            assert snr_ratio(SourceParams(opt.best_n_p_mean * bump, 1.0), 4) <= opt.best_ratio

    def test_dominates_reported_strong_target(self):
        assert find_optimum(1.0, 5).best_ratio >= 2.86

    def test_single_photon_threshold_has_no_interior_maximum(self):
        # ratio at N = 1 declines from unity for all n_p > 0
        with pytest.raises(SearchError):
            find_optimum(1.0, 1)

    def test_zero_noise_rejected(self):
        with pytest.raises(ZeroNoiseError):
            find_optimum(0.0, 3)


class TestFindBoundary:
    def test_points_sit_on_unity_ratio(self):
        curve = find_boundary(3, log_grid(0.5, 8.0, 7))
        assert len(curve.points) == 7
        for n_th, n_p in curve.points:
            assert abs(snr_ratio(SourceParams(n_p, n_th), 3) - 1.0) <= 1e-5

    def test_no_advantage_reported_not_guessed(self):
        # N = 1 never beats intensity detection at n_th = 1
        curve = find_boundary(1, [1.0])
        assert curve.points == ()
        assert curve.no_crossing == ((1.0, "below"),)

    def test_advantage_region_is_below_curve(self):
        curve = find_boundary(4, [2.0])
        (n_th, n_p), = curve.points
        assert snr_ratio(SourceParams(n_p / 2.0, n_th), 4) > 1.0

    def test_zero_noise_grid_rejected(self):
        with pytest.raises(ZeroNoiseError):
            find_boundary(2, [0.0, 1.0])

    def test_knee_tracks_threshold(self):
        grid = log_grid(0.3, 30.0, 40)
        for big_n in (2, 4):
            knee = boundary_knee(find_boundary(big_n, grid, scan_range=(1e-4, 1e6)))
            assert big_n / 2.0 <= knee <= 2.0 * big_n

    def test_knee_needs_enough_points(self):
        curve = find_boundary(2, [1.0, 2.0])
        with pytest.raises(ValueError):
            boundary_knee(curve)


class TestLogGrid:
    def test_endpoints_and_monotone(self):
        grid = log_grid(0.1, 10.0, 21)
        assert grid[0] == pytest.approx(0.1)
        assert grid[-1] == pytest.approx(10.0)
        assert all(b > a for a, b in zip(grid, grid[1:]))

    def test_validation(self):
        with pytest.raises(ValueError):
            log_grid(0.0, 1.0, 5)
        with pytest.raises(ValueError):
            log_grid(1.0, 10.0, 1)
