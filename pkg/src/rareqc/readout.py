"""Monte Carlo photon statistics for direct and buffered single-ion readout.

The readout ion fluoresces while no excited neighbor Stark-shifts it out of
resonance. A qubit prepared in |0> leaves the blocking ion excited (dark
windows, photons only leak after the blocker decays); a qubit in |1> leaves
the readout unshifted (bright windows). The buffered scheme repeats the
interrogation through a freshly reset buffer ion, accumulating counts over
``n_reps`` windows.

Trials are simulated in fixed-size blocks, each with its own counter-derived
random stream, so a given ``(params, seed, n_trials)`` triple yields
bit-identical histograms regardless of how many worker threads execute the
blocks.
"""

from __future__ import annotations

import dataclasses
import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

T1_EU_DEFAULT = 1.9e-3          # qubit excited-state lifetime [s]
TAU_READOUT_NATIVE_DEFAULT = 100e-6
TAU_EFF_DEFAULT = 200e-9        # cavity-enhanced cycling lifetime [s]
TRANSFER_PULSE_DURATION = 400e-9
TRANSFER_PULSE_ERROR = 4e-4     # 99.96 % transfer efficiency per pulse

# Detected background rate [counts/s], frozen by calibrate_background_rate so
# that the direct scheme at eta=1 %, t_det=0.15*T1 lands on 93 % correct-state
# probability (93.01 % at 2e6 trials). Re-run `rareqc calibrate` to regenerate.
CALIBRATED_BACKGROUND_RATE = 3580.0

_BLOCK_SIZE = 1 << 14


@dataclass(frozen=True)
class ReadoutParams:
    """Physical constants of the readout chain.

    Times are in seconds, rates in detected counts per second. ``tau_eff`` is
    the Purcell-shortened cycling lifetime of the readout ion;
    ``emission_saturation`` sets the saturated emission rate as
    ``1 / (emission_saturation * tau_eff)``.
    """

    t1_qubit: float = T1_EU_DEFAULT
    tau_readout_native: float = TAU_READOUT_NATIVE_DEFAULT
    purcell_factor: float = 1e4
    tau_eff: float = TAU_EFF_DEFAULT
    eta: float = 0.01
    background_rate: float = CALIBRATED_BACKGROUND_RATE
    t_det: float = 0.15 * T1_EU_DEFAULT
    n_reps: int = 10
    p_transfer_err: float = TRANSFER_PULSE_ERROR
    t_pulse: float = TRANSFER_PULSE_DURATION
    t_excited_per_rep: float = 2 * TRANSFER_PULSE_DURATION
    decay_branching_to_dark: float = 0.5
    emission_saturation: float = 2.0
    reset_time: float = 1e-5

    def __post_init__(self):
        if self.tau_eff > self.tau_readout_native:
            raise ValueError("tau_eff cannot exceed the native readout lifetime")
        for name in ("t1_qubit", "tau_readout_native", "purcell_factor", "tau_eff",
                     "background_rate", "t_det", "t_pulse", "t_excited_per_rep",
                     "emission_saturation", "reset_time"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        for name in ("eta", "p_transfer_err", "decay_branching_to_dark"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.n_reps < 1:
            raise ValueError("n_reps must be a positive integer")

    def replace(self, **changes) -> "ReadoutParams":
        return dataclasses.replace(self, **changes)

    def emission_rate(self) -> float:
        """Saturated photon emission rate of the unshifted readout ion."""
        return 1.0 / (self.emission_saturation * self.tau_eff)

    def detected_rate(self) -> float:
        """Signal rate after the total detection efficiency."""
        return self.eta * self.emission_rate()

    def cycle_duration(self) -> float:
        """Wall-clock cost of one buffered repetition (reset is time, not error)."""
        return self.t_det + self.reset_time + 3 * self.t_pulse

    def total_duration(self) -> float:
        return self.n_reps * self.cycle_duration()


@dataclass(frozen=True)
class PhotonHistogram:
    """Probability mass over detected photon counts for one prepared state."""

    probabilities: np.ndarray
    n_trials: int
    prepared_state: int

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        p.setflags(write=False)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("histogram needs a nonempty 1-d mass vector")
        if p.min() < 0:
            raise ValueError("histogram masses must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"histogram masses sum to {p.sum()}, not 1")
        if self.prepared_state not in (0, 1):
            raise ValueError("prepared_state must be 0 or 1")
        object.__setattr__(self, "probabilities", p)

    @property
    def max_count(self) -> int:
        return self.probabilities.size - 1

    def mean(self) -> float:
        return float(np.arange(self.probabilities.size) @ self.probabilities)

    def prob_below(self, threshold: int) -> float:
        return float(self.probabilities[: max(0, threshold)].sum())

    def prob_at_least(self, threshold: int) -> float:
        return 1.0 - self.prob_below(threshold)


@dataclass(frozen=True)
class ReadoutPolicy:
    """Photon-count threshold decision: counts >= threshold read as bright."""

    threshold: int
    decide_bright_as: int = 1

    def __post_init__(self):
        if self.threshold < 0:
            raise ValueError("threshold must be nonnegative")
        if self.decide_bright_as not in (0, 1):
            raise ValueError("decide_bright_as must be 0 or 1")


@dataclass(frozen=True)
class ConfusionMatrix:
    """Per-qubit asymmetric readout error probabilities."""

    p_read1_given0: float
    p_read0_given1: float

    def __post_init__(self):
        for name in ("p_read1_given0", "p_read0_given1"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")

    def average_error(self) -> float:
        return 0.5 * (self.p_read1_given0 + self.p_read0_given1)


def derive_seed(seed: int, *tags: int) -> int:
    """Deterministic sub-seed for an independent stream tagged by integers."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(t) for t in tags))
    return int(ss.generate_state(1, np.uint64)[0])


def _block_rng(seed: int, block_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(block_index),))
    return np.random.Generator(np.random.Philox(ss))


def _simulate_block(params: ReadoutParams, prepared: int, n: int, seed: int,
                    block_index: int) -> np.ndarray:
    """Photon counts for one block of trials; returns a bincount vector.

    The number and order of random draws depends only on the parameters, never
    on sampled values, which keeps blocks aligned across schemes that share a
    stream (the direct scheme is the n_reps=1 reduction of this engine).
    """
    rng = _block_rng(seed, block_index)
    t1 = params.t1_qubit
    rate = params.detected_rate()
    lam_background = params.background_rate * params.t_det

    if np.isfinite(t1) and t1 > 0 and params.t_excited_per_rep > 0:
        p_decay = -np.expm1(-params.t_excited_per_rep / t1)
    else:
        p_decay = 0.0

    bright_branch = np.full(n, prepared == 1)
    counts = np.zeros(n, dtype=np.int64)
    for _ in range(params.n_reps):
        if params.t_excited_per_rep > 0:
            decayed = bright_branch & (rng.random(n) < p_decay)
            to_dark = decayed & (rng.random(n) < params.decay_branching_to_dark)
            bright_branch = bright_branch & ~to_dark
        blocker_excited = ~bright_branch
        if params.p_transfer_err > 0:
            failures = rng.random((n, 3)) < params.p_transfer_err
            inverted = (failures.sum(axis=1) % 2).astype(bool)
            blocker_excited = blocker_excited ^ inverted
        if np.isfinite(t1):
            t_blocker_decay = rng.exponential(t1, n)
        else:
            t_blocker_decay = np.full(n, np.inf)
        exposure = np.where(blocker_excited,
                            np.clip(params.t_det - t_blocker_decay, 0.0, None),
                            params.t_det)
        counts += rng.poisson(rate * exposure + lam_background)
    return np.bincount(counts)


def _run_blocks(params: ReadoutParams, prepared: int, n_trials: int, seed: int,
                n_workers: int) -> np.ndarray:
    sizes = [_BLOCK_SIZE] * (n_trials // _BLOCK_SIZE)
    if n_trials % _BLOCK_SIZE:
        sizes.append(n_trials % _BLOCK_SIZE)
    jobs = [(params, prepared, size, seed, index) for index, size in enumerate(sizes)]
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            bincounts = list(pool.map(lambda args: _simulate_block(*args), jobs))
    else:
        bincounts = [_simulate_block(*job) for job in jobs]
    width = max(b.size for b in bincounts)
    total = np.zeros(width, dtype=np.int64)
    for b in bincounts:
        total[: b.size] += b
    return total


def simulate_buffered(params: ReadoutParams, prepared: int, n_trials: int, seed: int,
                      n_workers: int = 1) -> PhotonHistogram:
    """Cumulative photon-count histogram over ``params.n_reps`` buffered windows.

    Per repetition: the bright-branch qubit spends ``t_excited_per_rep`` in the
    excited state and may decay (permanently flipping its branch with
    probability ``decay_branching_to_dark``); each of the three transfer
    pulses fails independently with ``p_transfer_err``, an odd number of
    failures inverting that window's evidence; the buffer blocks the readout
    ion during dark windows until its own exponential decay leaks photons.
    Buffer reset between repetitions is perfect and only costs time.
    """
    if prepared not in (0, 1):
        raise ValueError("prepared state must be the qubit label 0 or 1")
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    counts = _run_blocks(params, prepared, n_trials, seed, n_workers)
    return PhotonHistogram(counts / n_trials, n_trials=n_trials, prepared_state=prepared)


def simulate_direct(params: ReadoutParams, prepared: int, n_trials: int, seed: int,
                    n_workers: int = 1) -> PhotonHistogram:
    """Single-window readout with the qubit itself as the blocking ion.

    Exactly the ``n_reps=1`` buffered engine with no transfer pulses and no
    separate excitation interval: prepared |0> keeps the readout shifted until
    the qubit decays, prepared |1> is bright for the whole window.
    """
    direct = params.replace(n_reps=1, t_excited_per_rep=0.0, p_transfer_err=0.0)
    return simulate_buffered(direct, prepared, n_trials, seed, n_workers=n_workers)


def optimal_threshold(h0: PhotonHistogram, h1: PhotonHistogram):
    """Exhaustive integer-threshold scan maximizing the equal-prior correctness.

    Returns ``(ReadoutPolicy, distinguishability)`` where distinguishability is
    ``(P(correct|0) + P(correct|1)) / 2``; ties go to the smaller threshold.
    """
    if h0.probabilities.size == 0 or h1.probabilities.size == 0:
        raise ValueError("cannot optimize a threshold over empty histograms")
    if h0.prepared_state == h1.prepared_state:
        raise ValueError("histograms must come from opposite prepared states")
    if h0.prepared_state != 0:
        h0, h1 = h1, h0
    width = max(h0.probabilities.size, h1.probabilities.size)
    p0 = np.zeros(width)
    p0[: h0.probabilities.size] = h0.probabilities
    p1 = np.zeros(width)
    p1[: h1.probabilities.size] = h1.probabilities
    # P(N0 < thr) and P(N1 >= thr) for thr = 0 .. max_count + 1.
    below0 = np.concatenate([[0.0], np.cumsum(p0)])
    at_least1 = 1.0 - np.concatenate([[0.0], np.cumsum(p1)])
    score = 0.5 * (below0 + at_least1)
    threshold = int(np.argmax(score))
    return ReadoutPolicy(threshold=threshold), float(score[threshold])


def optimize_detection_time(params: ReadoutParams, grid, n_trials: int, seed: int,
                            scheme: str = "direct", n_workers: int = 1):
    """Scan detection windows; returns the argmax and the full scan curve.

    Each grid point runs the simulate + threshold pipeline for both prepared
    states on its own derived random stream, so the result is deterministic
    for a given seed no matter how the grid is chunked.
    """
    grid = [float(t) for t in grid]
    if not grid or any(t <= 0 for t in grid):
        raise ValueError("grid must be a nonempty list of positive detection times")
    if scheme not in ("direct", "buffered"):
        raise ValueError(f"unknown scheme '{scheme}'")
    simulate = simulate_direct if scheme == "direct" else simulate_buffered
    curve = []
    for index, t_det in enumerate(grid):
        point_params = params.replace(t_det=t_det)
        h0 = simulate(point_params, 0, n_trials, derive_seed(seed, index, 0), n_workers=n_workers)
        h1 = simulate(point_params, 1, n_trials, derive_seed(seed, index, 1), n_workers=n_workers)
        policy, dist = optimal_threshold(h0, h1)
        curve.append({"t_det": t_det, "distinguishability": dist, "threshold": policy.threshold})
    best = max(curve, key=lambda row: row["distinguishability"])
    return best["t_det"], curve


def confusion_matrix(params: ReadoutParams, n_trials: int, seed: int,
                     n_workers: int = 1) -> ConfusionMatrix:
    """Per-state error probabilities of the buffered scheme at its best threshold.

    The decay-dominated expectation is that a |0> is misread more often than a
    |1| (the excited blocker leaks photons); if the simulated optimum lands on
    the opposite ordering this is flagged as a warning rather than an error,
    since near-balanced optima are legitimate at low error rates.
    """
    h0 = simulate_buffered(params, 0, n_trials, derive_seed(seed, 0), n_workers=n_workers)
    h1 = simulate_buffered(params, 1, n_trials, derive_seed(seed, 1), n_workers=n_workers)
    policy, _ = optimal_threshold(h0, h1)
    p10 = h0.prob_at_least(policy.threshold)
    p01 = h1.prob_below(policy.threshold)
    if p10 < p01:
        warnings.warn(
            "buffered readout asymmetry is inverted at these parameters: "
            f"p_read1_given0={p10:.2e} < p_read0_given1={p01:.2e}",
            stacklevel=2,
        )
    return ConfusionMatrix(p_read1_given0=p10, p_read0_given1=p01)


def histograms_to_csv(histograms, path) -> None:
    """Stacked CSV export with columns n_photons,probability,prepared_state."""
    lines = ["n_photons,probability,prepared_state"]
    for hist in histograms:
        for n, mass in enumerate(hist.probabilities):
            lines.append(f"{n},{mass!r},{hist.prepared_state}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def histogram_to_json_dict(hist: PhotonHistogram, params: ReadoutParams, seed: int) -> dict:
    """Histogram plus full provenance (parameters and seed) as a JSON-safe dict."""
    return {
        "params": dataclasses.asdict(params),
        "seed": int(seed),
        "n_trials": int(hist.n_trials),
        "prepared_state": int(hist.prepared_state),
        "histogram": {
            "n_photons": list(range(hist.probabilities.size)),
            "probability": [float(p) for p in hist.probabilities],
        },
    }


def histogram_to_json(hist: PhotonHistogram, params: ReadoutParams, seed: int, path) -> None:
    with open(path, "w") as fh:
        json.dump(histogram_to_json_dict(hist, params, seed), fh, indent=2, sort_keys=True)
        fh.write("\n")


def calibrate_background_rate(params: ReadoutParams, target: float = 0.93,
                              tolerance: float = 0.005, n_trials: int = 200_000,
                              seed: int = 2024, max_rate: float = 2e4) -> float:
    """Find the detected background rate pinning the direct scheme on ``target``.

    The direct-scheme correct-state probability decreases monotonically with
    background, so a bisection on the rate converges; the returned value is
    meant to be frozen into the configuration once and reused everywhere.
    """

    def distinguishability(rate: float) -> float:
        trial = params.replace(background_rate=rate)
        h0 = simulate_direct(trial, 0, n_trials, derive_seed(seed, 0))
        h1 = simulate_direct(trial, 1, n_trials, derive_seed(seed, 1))
        return optimal_threshold(h0, h1)[1]

    low, high = 0.0, max_rate
    if distinguishability(low) < target:
        raise ValueError("target correctness unreachable even with zero background")
    if distinguishability(high) > target:
        raise ValueError(f"background ceiling {max_rate} does not bring correctness down to {target}")
    for _ in range(40):
        mid = 0.5 * (low + high)
        value = distinguishability(mid)
        if abs(value - target) <= tolerance * 0.5:
            return mid
        if value > target:
            low = mid
        else:
            high = mid
    return 0.5 * (low + high)
