"""Sequential shot-by-shot Bayesian detection trajectories.

Each shot of the experiment heralds a probe state (for quantum signals), lets
the physically realized return state pick the receiver outcome by inverse
transform sampling, and updates the target-present probability through Bayes'
rule.  Posteriors accumulate in log-odds form, so thirty thousand
multiplicative updates cannot underflow; the per-shot arithmetic is otherwise
identical to the direct Bayes update.

Reproducibility contract: every trial draws from its own counter-based Philox
stream keyed by an integer mix of (seed, trial_index), so a trajectory is a
pure function of (config, trial_index) and ensembles reduce identically for
any degree of parallelism.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.special import expit

from .channel import TargetChannel, apply_channel, background_state
from .matching import MatchSpec, matched_mean
from .numerics import CompensatedVectorSum
from .povm import ClickMultiplex, click_distribution
from .states import DisplacedThermal, herald_state, tmsv_marginal

# Trials are reduced in fixed chunks: pairwise summation inside a chunk, then
# compensated accumulation across chunks in index order.  Workers may compute
# chunks in any order without changing the result.
CHUNK_SIZE = 64

_LOG_RATIO_CLIP = 700.0


class SignalKind(str, Enum):
    QUANTUM_HERALDED = "quantum_heralded"
    COHERENT = "coherent"
    QUANTUM_HERALDED_MATCHED = "quantum_heralded_matched"


@dataclass(frozen=True)
class TrajectoryConfig:
    """Full parameterization of a sequential detection ensemble."""

    nbar: float
    herald_efficiency: float
    herald_detectors: int
    receiver_efficiency: float
    receiver_detectors: int
    reflectivity: float
    background_mean: float
    shots: int
    trials: int
    seed: int
    signal_kind: SignalKind
    target_present: bool
    eavesdropper_efficiency: float = 0.9

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError(f"need at least one shot, got {self.shots}")
        if self.trials < 1:
            raise ValueError(f"need at least one trial, got {self.trials}")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in 64 bits")
        object.__setattr__(self, "signal_kind", SignalKind(self.signal_kind))


@dataclass(frozen=True)
class TrajectoryResult:
    """Ensemble summary: mean posterior curve plus threshold crossings."""

    mean_posterior: np.ndarray
    mean_crossings: dict
    per_trial_crossings: dict
    rng_metadata: dict


@dataclass(frozen=True)
class LikelihoodTables:
    """Per-herald-outcome receiver likelihoods, precomputed before the shot loop.

    Row k of ``l1`` is the receiver click distribution under H1 given herald
    outcome k (a single row for coherent signals); ``l0`` is the herald-
    independent background distribution.  ``log_ratio[k, k_S]`` is the log-odds
    increment for observing k_S receiver clicks after heralding k.
    """

    herald_cdf: Optional[np.ndarray]
    l0: np.ndarray
    l1: np.ndarray
    log_ratio: np.ndarray
    cdf_h0: np.ndarray
    cdf_h1: np.ndarray
    probe_nbar: float


def splitmix64(value: int) -> int:
    """One step of the SplitMix64 integer mixer (public-domain constants)."""
    z = (value + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def trial_stream(seed: int, trial_index: int) -> np.random.Generator:
    """Independent, reproducible generator for one trial.

    The Philox key is a SplitMix64 mix of the seed and the trial index;
    counter-based generation guarantees distinct keys give independent streams.
    """
    key = splitmix64(splitmix64(seed) ^ (trial_index + 0x9E3779B97F4A7C15))
    return np.random.Generator(np.random.Philox(key=key))


def click_cdf(multiplex: ClickMultiplex, state) -> np.ndarray:
    """Cumulative click distribution, final entry pinned to exactly one."""
    dist = click_distribution(multiplex, state)
    cdf = np.cumsum(dist)
    if abs(cdf[-1] - 1.0) > 1e-12 * max(1.0, float(np.abs(dist).sum())):
        raise ValueError(f"cumulative distribution ends at {cdf[-1]!r}, not 1")
    cdf[-1] = 1.0
    return np.minimum(cdf, 1.0)


def sample_clicks(cdf: np.ndarray, r: float) -> int:
    """Inverse transform sampling: smallest k with cdf[k] >= r."""
    cdf = np.asarray(cdf, dtype=float)
    if cdf.ndim != 1 or cdf.size == 0:
        raise ValueError("cdf must be a nonempty 1-D array")
    if np.any(np.diff(cdf) < 0.0) or abs(cdf[-1] - 1.0) > 1e-12:
        raise ValueError("cdf must be nondecreasing and end at 1")
    if not (0.0 < r < 1.0):
        raise ValueError(f"uniform draw must lie in (0, 1), got {r}")
    return int(np.searchsorted(cdf, r, side="left"))


def _pinned_cumsum(rows: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(rows, axis=-1)
    cdf[..., -1] = 1.0
    return np.minimum(cdf, 1.0)


def build_tables(config: TrajectoryConfig) -> LikelihoodTables:
    """Precompute herald and receiver statistics for a configuration.

    For matched runs the quantum probe runs at the click-matched mean while
    ``config.nbar`` keeps its role as the coherent reference mean.
    """
    channel = TargetChannel(config.reflectivity, config.background_mean)
    receiver = ClickMultiplex(config.receiver_detectors, config.receiver_efficiency)
    l0 = click_distribution(receiver, background_state(channel))

    if config.signal_kind is SignalKind.COHERENT:
        probe_nbar = config.nbar
        herald_cdf = None
        return_state = apply_channel(channel, DisplacedThermal(probe_nbar, 0.0))
        l1 = click_distribution(receiver, return_state)[None, :]
    else:
        if config.signal_kind is SignalKind.QUANTUM_HERALDED_MATCHED:
            probe_nbar = matched_mean(
                MatchSpec(config.nbar, config.eavesdropper_efficiency)
            )
        else:
            probe_nbar = config.nbar
        herald_mux = ClickMultiplex(config.herald_detectors, config.herald_efficiency)
        herald_cdf = click_cdf(herald_mux, tmsv_marginal(probe_nbar))
        rows = []
        # The heralded state is used for every outcome, including k = 0.
        for k in range(config.herald_detectors + 1):
            conditioned = herald_state(
                probe_nbar, config.herald_efficiency, config.herald_detectors, k
            )
            rows.append(click_distribution(receiver, apply_channel(channel, conditioned)))
        l1 = np.vstack(rows)

    with np.errstate(divide="ignore"):
        log_ratio = np.log(np.clip(l1, 1e-300, None)) - np.log(
            np.clip(l0, 1e-300, None)
        )[None, :]
    log_ratio = np.where(l1 == l0[None, :], 0.0, log_ratio)
    log_ratio = np.clip(log_ratio, -_LOG_RATIO_CLIP, _LOG_RATIO_CLIP)

    return LikelihoodTables(
        herald_cdf=herald_cdf,
        l0=l0,
        l1=l1,
        log_ratio=log_ratio,
        cdf_h0=_pinned_cumsum(l0.copy()),
        cdf_h1=_pinned_cumsum(l1.copy()),
        probe_nbar=probe_nbar,
    )


@dataclass
class ShotContext:
    """Mutable per-trial state threaded through run_shot."""

    tables: LikelihoodTables
    target_present: bool
    rng: np.random.Generator
    log_odds: float = 0.0


def run_shot(ctx: ShotContext) -> tuple[float, float]:
    """Advance one shot; returns the updated (Pr(H1), Pr(H0)) pair.

    Quantum signals consume two uniform draws per shot (herald outcome, then
    receiver outcome); coherent signals consume one.  The receiver outcome is
    sampled from the cdf of the physically realized state: the H1-conditioned
    state of the sampled herald outcome when the target is present, the bare
    background otherwise.
    """
    tables = ctx.tables
    if tables.herald_cdf is not None:
        draws = ctx.rng.random(2)
        herald_outcome = int(np.searchsorted(tables.herald_cdf, draws[0], side="left"))
        receiver_draw = draws[1]
    else:
        herald_outcome = 0
        receiver_draw = ctx.rng.random()
    if ctx.target_present:
        cdf = tables.cdf_h1[herald_outcome]
    else:
        cdf = tables.cdf_h0
    receiver_clicks = int(np.searchsorted(cdf, receiver_draw, side="left"))
    ctx.log_odds += float(tables.log_ratio[herald_outcome, receiver_clicks])
    p1 = float(expit(ctx.log_odds))
    return p1, 1.0 - p1


def run_trajectory(
    config: TrajectoryConfig,
    trial_index: int,
    tables: Optional[LikelihoodTables] = None,
) -> np.ndarray:
    """Posterior Pr(H1) after each of ``config.shots`` shots, for one trial.

    Deterministic given (config.seed, trial_index).  Starts from equal priors,
    Pr(H1) = 1/2.  The vectorized arithmetic reproduces the scalar run_shot
    loop bit for bit: draws are consumed in the same order and the log-odds
    prefix sums accumulate left to right.
    """
    if tables is None:
        tables = build_tables(config)
    rng = trial_stream(config.seed, trial_index)
    shots = config.shots

    if tables.herald_cdf is not None:
        draws = rng.random((shots, 2))
        herald_outcomes = np.searchsorted(tables.herald_cdf, draws[:, 0], side="left")
        receiver_draws = draws[:, 1]
    else:
        herald_outcomes = np.zeros(shots, dtype=np.intp)
        receiver_draws = rng.random(shots)

    if config.target_present:
        cdf_rows = tables.cdf_h1[herald_outcomes]
    else:
        cdf_rows = np.broadcast_to(tables.cdf_h0, (shots, tables.cdf_h0.size))
    receiver_clicks = np.sum(cdf_rows < receiver_draws[:, None], axis=1)

    increments = tables.log_ratio[herald_outcomes, receiver_clicks]
    log_odds = np.cumsum(increments)
    return expit(log_odds)


def first_crossing(curve: np.ndarray, threshold: float) -> Optional[int]:
    """1-based index of the first shot where the curve reaches the threshold."""
    hits = np.nonzero(curve >= threshold)[0]
    if hits.size == 0:
        return None
    return int(hits[0]) + 1


def _chunk_worker(config, tables, thresholds, start, stop):
    rows = np.empty((stop - start, config.shots))
    crossings = {thr: [] for thr in thresholds}
    for offset, trial in enumerate(range(start, stop)):
        curve = run_trajectory(config, trial, tables)
        rows[offset] = curve
        for thr in thresholds:
            crossings[thr].append(first_crossing(curve, thr))
    return np.sum(rows, axis=0), crossings


def average_trajectories(
    config: TrajectoryConfig,
    threads: int = 1,
    thresholds: tuple[float, ...] = (0.8, 0.9),
) -> TrajectoryResult:
    """Ensemble mean of the posterior trajectory plus crossing statistics.

    Crossing shots are reported both for the ensemble-mean curve (the
    headline estimator) and per trial (for dispersion).  The reduction order
    is fixed by chunk index, so any thread count yields identical output.
    """
    tables = build_tables(config)
    thresholds = tuple(float(t) for t in thresholds)
    bounds = [
        (start, min(start + CHUNK_SIZE, config.trials))
        for start in range(0, config.trials, CHUNK_SIZE)
    ]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(
                pool.map(
                    lambda b: _chunk_worker(config, tables, thresholds, b[0], b[1]),
                    bounds,
                )
            )
    else:
        partials = [_chunk_worker(config, tables, thresholds, a, b) for a, b in bounds]

    accumulator = CompensatedVectorSum(config.shots)
    per_trial = {thr: [] for thr in thresholds}
    for partial_sum, crossings in partials:
        accumulator.add(partial_sum)
        for thr in thresholds:
            per_trial[thr].extend(crossings[thr])
    mean_posterior = accumulator.result() / config.trials
    mean_crossings = {thr: first_crossing(mean_posterior, thr) for thr in thresholds}

    metadata = {
        "seed": config.seed,
        "trials": config.trials,
        "shots": config.shots,
        "generator": "numpy.random.Philox (counter-based, 4x64)",
        "stream_derivation": "key = splitmix64(splitmix64(seed) ^ (trial_index + 0x9E3779B97F4A7C15))",
        "chunk_size": CHUNK_SIZE,
        "probe_nbar": tables.probe_nbar,
    }
    return TrajectoryResult(
        mean_posterior=mean_posterior,
        mean_crossings=mean_crossings,
        per_trial_crossings=per_trial,
        rng_metadata=metadata,
    )
