"""Monte Carlo readout tests against analytic and quadrature oracles."""

import json

import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss
from scipy import stats

from rareqc.readout import (
    ConfusionMatrix,
    PhotonHistogram,
    ReadoutParams,
    ReadoutPolicy,
    calibrate_background_rate,
    confusion_matrix,
    derive_seed,
    histogram_to_json_dict,
    histograms_to_csv,
    optimal_threshold,
    optimize_detection_time,
    simulate_buffered,
    simulate_direct,
)


def poisson_histogram(mean, prepared, kmax):
    """Exact Poisson pmf packaged as a PhotonHistogram (tail folded into the last bin)."""
    pmf = stats.poisson.pmf(np.arange(kmax + 1), mean)
    pmf[-1] += stats.poisson.sf(kmax, mean)
    return PhotonHistogram(pmf, n_trials=1, prepared_state=prepared)


def dark_window_pmf(rate, t_det, t1, kmax, nodes=3000):
    """Quadrature oracle for one dark window: the blocker decays at an
    exponential time and the readout leaks Poisson photons afterwards."""
    x, w = leggauss(nodes)
    t = 0.5 * t_det * (x + 1.0)
    weight = 0.5 * t_det * w * np.exp(-t / t1) / t1
    lam = rate * (t_det - t)
    ks = np.arange(kmax + 1)
    pmf = (stats.poisson.pmf(ks[:, None], lam[None, :]) * weight[None, :]).sum(axis=1)
    pmf[0] += np.exp(-t_det / t1)
    return pmf


def convolve_pmfs(pmf, reps):
    out = np.array([1.0])
    for _ in range(reps):
        out = np.convolve(out, pmf)
    return out


class TestParams:
    def test_defaults_satisfy_invariants(self):
        p = ReadoutParams()
        assert p.tau_eff <= p.tau_readout_native
        assert p.t1_qubit == pytest.approx(1.9e-3)
        assert p.tau_readout_native == pytest.approx(100e-6)
        assert p.tau_eff == pytest.approx(200e-9)
        assert p.purcell_factor >= 1e4
        assert p.t_pulse == pytest.approx(400e-9)
        assert p.p_transfer_err == pytest.approx(4e-4)

    def test_tau_eff_cannot_exceed_native_lifetime(self):
        with pytest.raises(ValueError, match="tau_eff"):
            ReadoutParams(tau_eff=2e-4, tau_readout_native=1e-4)

    def test_probabilities_validated(self):
        with pytest.raises(ValueError):
            ReadoutParams(eta=1.5)
        with pytest.raises(ValueError):
            ReadoutParams(n_reps=0)

    def test_histogram_invariants_enforced(self):
        with pytest.raises(ValueError, match="sum"):
            PhotonHistogram(np.array([0.5, 0.4]), 10, 0)
        with pytest.raises(ValueError, match="nonnegative"):
            PhotonHistogram(np.array([1.2, -0.2]), 10, 0)
        with pytest.raises(ValueError):
            ReadoutPolicy(threshold=-1)


class TestSimulate:
    def test_no_detection_means_no_photons(self):
        p = ReadoutParams(eta=0.0, background_rate=0.0)
        for prepared in (0, 1):
            for simulate in (simulate_direct, simulate_buffered):
                h = simulate(p, prepared, 2000, seed=1)
                assert h.probabilities[0] == pytest.approx(1.0)

    def test_bright_mean_matches_closed_form(self):
        # Analytic Poisson mean for the bright state, 3 sigma at 1e6 trials.
        p = ReadoutParams()
        n = 1_000_000
        h = simulate_direct(p, 1, n, seed=5)
        mean = (p.detected_rate() + p.background_rate) * p.t_det
        assert h.mean() == pytest.approx(mean, abs=3 * np.sqrt(mean / n))

    def test_buffered_single_perfect_rep_reduces_to_direct(self):
        p = ReadoutParams(n_reps=1, t_excited_per_rep=0.0, p_transfer_err=0.0)
        for prepared in (0, 1):
            hb = simulate_buffered(p, prepared, 40_000, seed=9)
            hd = simulate_direct(p, prepared, 40_000, seed=9)
            np.testing.assert_array_equal(hb.probabilities, hd.probabilities)

    def test_mass_sums_to_one_and_nonnegative(self):
        p = ReadoutParams()
        for prepared in (0, 1):
            h = simulate_buffered(p, prepared, 30_000, seed=2)
            assert abs(h.probabilities.sum() - 1.0) < 1e-9
            assert h.probabilities.min() >= 0.0

    def test_bit_identical_across_worker_counts(self):
        p = ReadoutParams(n_reps=3)
        a = simulate_buffered(p, 0, 50_000, seed=4, n_workers=1)
        b = simulate_buffered(p, 0, 50_000, seed=4, n_workers=3)
        np.testing.assert_array_equal(a.probabilities, b.probabilities)

    def test_invalid_prepared_state_rejected(self):
        with pytest.raises(ValueError):
            simulate_direct(ReadoutParams(), 2, 100, seed=0)


class TestOptimalThreshold:
    def test_disjoint_supports_are_fully_distinguishable(self):
        h0 = PhotonHistogram(np.array([1.0]), 1, 0)
        mass = np.zeros(21)
        mass[20] = 1.0
        h1 = PhotonHistogram(mass, 1, 1)
        policy, dist = optimal_threshold(h0, h1)
        assert dist == pytest.approx(1.0)
        assert 0 < policy.threshold <= 20

    def test_identical_histograms_are_indistinguishable(self):
        pmf = stats.poisson.pmf(np.arange(40), 6.0)
        pmf = pmf / pmf.sum()
        h0 = PhotonHistogram(pmf, 1, 0)
        h1 = PhotonHistogram(pmf, 1, 1)
        _, dist = optimal_threshold(h0, h1)
        assert dist == pytest.approx(0.5, abs=1e-12)

    def test_against_poisson_cdf_brute_force(self):
        # Closed-form oracle: scan every threshold with exact Poisson CDFs.
        mu0, mu1, kmax = 1.0, 14.0, 60
        h0 = poisson_histogram(mu0, 0, kmax)
        h1 = poisson_histogram(mu1, 1, kmax)
        policy, dist = optimal_threshold(h0, h1)
        best_thr, best_val = 0, -1.0
        for thr in range(kmax + 2):
            val = 0.5 * (stats.poisson.cdf(thr - 1, mu0) + stats.poisson.sf(thr - 1, mu1))
            if val > best_val + 1e-15:
                best_thr, best_val = thr, val
        assert policy.threshold == best_thr
        assert dist == pytest.approx(best_val, abs=1e-9)

    def test_same_prepared_labels_rejected(self):
        h = PhotonHistogram(np.array([1.0]), 1, 0)
        with pytest.raises(ValueError, match="opposite"):
            optimal_threshold(h, h)


class TestBufferedPhysics:
    def test_distinguishability_monotone_in_repetitions(self):
        # With no excited-state decay, more windows can only add evidence.
        p = ReadoutParams(t_excited_per_rep=0.0)
        values = []
        for reps in (1, 2, 4, 8, 16):
            pr = p.replace(n_reps=reps)
            h0 = simulate_buffered(pr, 0, 60_000, derive_seed(20, reps, 0))
            h1 = simulate_buffered(pr, 1, 60_000, derive_seed(20, reps, 1))
            values.append(optimal_threshold(h0, h1)[1])
        for lo, hi in zip(values, values[1:]):
            assert hi >= lo - 0.004  # 3 sigma MC slack

    def test_long_windows_without_decay_reach_near_perfect_readout(self):
        p = ReadoutParams(t1_qubit=np.inf, background_rate=0.0)
        t_det = 50 * p.tau_eff / p.eta
        pr = p.replace(t_det=t_det)
        h0 = simulate_buffered(pr, 0, 100_000, derive_seed(21, 0))
        h1 = simulate_buffered(pr, 1, 100_000, derive_seed(21, 1))
        _, dist = optimal_threshold(h0, h1)
        assert dist > 0.9999

    def test_dark_window_statistics_match_quadrature_oracle(self):
        # Transfer pulses and qubit decay off, background off: the only error
        # mechanism left is buffer decay leaking photons into dark windows.
        p = ReadoutParams(p_transfer_err=0.0, t_excited_per_rep=0.0,
                          background_rate=0.0, n_reps=3)
        n = 400_000
        h0 = simulate_buffered(p, 0, n, derive_seed(33, 0))
        h1 = simulate_buffered(p, 1, n, derive_seed(33, 1))

        window = dark_window_pmf(p.detected_rate(), p.t_det, p.t1_qubit, kmax=40)
        dark_pmf = convolve_pmfs(window, p.n_reps)
        width = max(dark_pmf.size, h0.probabilities.size)
        dark_full = np.zeros(width)
        dark_full[: dark_pmf.size] = dark_pmf
        mc = np.zeros(width)
        mc[: h0.probabilities.size] = h0.probabilities
        sigma = np.sqrt(np.clip(dark_full * (1 - dark_full), 1e-12, None) / n)
        assert np.all(np.abs(mc - dark_full) <= 5 * sigma + 1e-6)

        # Error probabilities at the jointly scanned threshold agree too.
        policy, dist = optimal_threshold(h0, h1)
        bright_total = p.detected_rate() * p.t_det * p.n_reps
        oracle_p10 = float(dark_full[policy.threshold:].sum())
        oracle_p01 = float(stats.poisson.cdf(policy.threshold - 1, bright_total))
        mc_p10 = h0.prob_at_least(policy.threshold)
        mc_p01 = h1.prob_below(policy.threshold)
        assert mc_p10 == pytest.approx(oracle_p10, abs=4 * np.sqrt(oracle_p10 / n) + 1e-6)
        assert mc_p01 == pytest.approx(oracle_p01, abs=4 * np.sqrt(oracle_p01 / n) + 1e-6)

    def test_direct_error_exceeds_buffered_error_tenfold(self):
        p = ReadoutParams()
        n = 100_000
        direct = optimal_threshold(
            simulate_direct(p, 0, n, derive_seed(40, 0)),
            simulate_direct(p, 1, n, derive_seed(40, 1)))[1]
        buffered = optimal_threshold(
            simulate_buffered(p, 0, n, derive_seed(41, 0)),
            simulate_buffered(p, 1, n, derive_seed(41, 1)))[1]
        assert (1 - buffered) <= (1 - direct) / 10


class TestDetectionTimeScan:
    def test_singleton_grid_returns_its_point(self):
        p = ReadoutParams()
        t = 0.15 * p.t1_qubit
        best, curve = optimize_detection_time(p, [t], 5_000, seed=1)
        assert best == pytest.approx(t)
        assert len(curve) == 1

    def test_deterministic_given_seed(self):
        p = ReadoutParams()
        grid = [1e-4, 2e-4, 3e-4]
        a = optimize_detection_time(p, grid, 10_000, seed=6)
        b = optimize_detection_time(p, grid, 10_000, seed=6)
        assert a == b

    def test_rejects_empty_or_nonpositive_grid(self):
        with pytest.raises(ValueError):
            optimize_detection_time(ReadoutParams(), [], 100, seed=0)
        with pytest.raises(ValueError):
            optimize_detection_time(ReadoutParams(), [0.0], 100, seed=0)


class TestConfusionMatrix:
    def test_perfect_detection_limit_has_vanishing_errors(self):
        p = ReadoutParams(eta=1.0, background_rate=0.0, t1_qubit=np.inf)
        cm = confusion_matrix(p, 20_000, seed=3)
        assert cm.p_read1_given0 < 1e-3
        assert cm.p_read0_given1 < 1e-3

    def test_default_average_error_in_buffered_band(self):
        cm = confusion_matrix(ReadoutParams(), 100_000, seed=8)
        assert cm.average_error() <= 6e-3  # distinguishability 99.7 % +- 0.3 pp

    def test_direct_scheme_asymmetry_is_decay_dominated(self):
        # A |0> keeps its ion excited for the whole window; decay leaks
        # photons, so misreading 0 as 1 dominates in the direct scheme.
        p = ReadoutParams()
        n = 100_000
        h0 = simulate_direct(p, 0, n, derive_seed(50, 0))
        h1 = simulate_direct(p, 1, n, derive_seed(50, 1))
        policy, _ = optimal_threshold(h0, h1)
        assert h0.prob_at_least(policy.threshold) > h1.prob_below(policy.threshold)

    def test_validation(self):
        with pytest.raises(ValueError):
            ConfusionMatrix(1.2, 0.0)
        assert ConfusionMatrix(2e-3, 0.0).average_error() == pytest.approx(1e-3)


class TestCalibration:
    def test_background_calibration_hits_target(self):
        p = ReadoutParams()
        rate = calibrate_background_rate(p, target=0.93, n_trials=100_000, seed=12)
        h0 = simulate_direct(p.replace(background_rate=rate), 0, 150_000, derive_seed(60, 0))
        h1 = simulate_direct(p.replace(background_rate=rate), 1, 150_000, derive_seed(60, 1))
        assert optimal_threshold(h0, h1)[1] == pytest.approx(0.93, abs=0.005)

    def test_frozen_default_is_consistent(self):
        p = ReadoutParams()
        h0 = simulate_direct(p, 0, 200_000, derive_seed(61, 0))
        h1 = simulate_direct(p, 1, 200_000, derive_seed(61, 1))
        assert optimal_threshold(h0, h1)[1] == pytest.approx(0.93, abs=0.005)


class TestExport:
    def test_csv_schema(self, tmp_path):
        p = ReadoutParams()
        h0 = simulate_direct(p, 0, 5_000, seed=1)
        h1 = simulate_direct(p, 1, 5_000, seed=2)
        path = tmp_path / "hist.csv"
        histograms_to_csv([h0, h1], path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "n_photons,probability,prepared_state"
        states = {line.split(",")[2] for line in lines[1:]}
        assert states == {"0", "1"}
        total = sum(float(line.split(",")[1]) for line in lines[1:])
        assert total == pytest.approx(2.0, abs=1e-9)

    def test_json_provenance_contains_params_and_seed(self):
        p = ReadoutParams()
        h = simulate_direct(p, 1, 5_000, seed=77)
        payload = histogram_to_json_dict(h, p, seed=77)
        assert payload["seed"] == 77
        assert payload["params"]["eta"] == p.eta
        assert payload["params"]["background_rate"] == p.background_rate
        assert sum(payload["histogram"]["probability"]) == pytest.approx(1.0, abs=1e-9)
        json.dumps(payload)  # must be serializable as-is
