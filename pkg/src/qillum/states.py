"""State models for the illumination pipeline.

Every state the closed-form pipeline touches is either a signed affine
combination of thermal density matrices (the exact representation of any
multiplex-click heralded TMSV signal mode) or a displaced thermal state (a
coherent signal after mixing with thermal background).  Both are fully
phase-insensitive for our purposes, so photon-number statistics and the
rotationally symmetric Wigner function characterize them completely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DegenerateHeraldingError, UnsupportedStateError

# Physicality of a signed mixture is spot-checked on this many Fock levels;
# beyond it thermal tails decay monotonically and need no check.
PHYSICALITY_CHECK_LEVELS = 200

# Near-degenerate heralds carry weights of magnitude ~1/denominator, and a sum
# of doubles of magnitude W cannot hit an absolute target better than ~W*eps.
# Validation tolerances therefore carry a weight-scale term.
_TRACE_TOL_FLOOR = 1e-12
_TRACE_TOL_PER_WEIGHT = 1e-14
_PHYSICALITY_TOL_FLOOR = 1e-12
_PHYSICALITY_TOL_PER_WEIGHT = 1e-15


@dataclass(frozen=True)
class ThermalComponent:
    """One thermal term of a signed mixture: ``weight * varrho[mean]``."""

    weight: float
    mean: float

    def __post_init__(self):
        if not math.isfinite(self.weight):
            raise ValueError(f"component weight must be finite, got {self.weight}")
        if not (self.mean >= 0.0):
            raise ValueError(f"thermal mean must be nonnegative, got {self.mean}")


@dataclass(frozen=True)
class SignedThermalMixture:
    """Affine combination of thermal states with weights summing to one.

    Weights may be negative; the combination must still describe a valid
    density matrix, which is spot-checked through the photon-number
    distribution on construction.
    """

    components: tuple[ThermalComponent, ...]

    def __post_init__(self):
        if not self.components:
            raise ValueError("a mixture needs at least one component")
        weights = self.weights
        scale = float(np.sum(np.abs(weights)))
        trace = math.fsum(weights.tolist())
        trace_tol = _TRACE_TOL_FLOOR + _TRACE_TOL_PER_WEIGHT * scale
        if abs(trace - 1.0) > trace_tol:
            raise ValueError(f"mixture trace {trace!r} deviates from 1 beyond {trace_tol}")
        tol = _PHYSICALITY_TOL_FLOOR + _PHYSICALITY_TOL_PER_WEIGHT * scale
        probs = _mixture_distribution(weights, self.means, PHYSICALITY_CHECK_LEVELS)
        if float(probs.min()) < -tol:
            raise ValueError(
                f"mixture is unphysical: p_n reaches {probs.min():.3e} (tolerance {tol:.1e})"
            )

    @classmethod
    def thermal(cls, mean: float) -> "SignedThermalMixture":
        return cls((ThermalComponent(1.0, float(mean)),))

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    @property
    def means(self) -> np.ndarray:
        return np.array([c.mean for c in self.components])


@dataclass(frozen=True)
class DisplacedThermal:
    """Coherent signal of mean |beta|^2 photons on top of a thermal background."""

    coherent_mean: float
    thermal_mean: float

    def __post_init__(self):
        if not (self.coherent_mean >= 0.0):
            raise ValueError(f"coherent mean must be nonnegative, got {self.coherent_mean}")
        if not (self.thermal_mean >= 0.0):
            raise ValueError(f"thermal mean must be nonnegative, got {self.thermal_mean}")


StateModel = Union[SignedThermalMixture, DisplacedThermal]


@dataclass(frozen=True)
class HeraldParams:
    nbar: float
    efficiency: float
    detectors: int
    clicks: int


@dataclass(frozen=True)
class HeraldedState:
    """A conditioned signal state together with the probability of heralding it."""

    state: SignedThermalMixture
    herald_probability: float
    params: HeraldParams

    def __post_init__(self):
        if not (0.0 <= self.herald_probability <= 1.0):
            raise ValueError(f"herald probability {self.herald_probability} outside [0, 1]")


def _unwrap(state) -> StateModel:
    if isinstance(state, HeraldedState):
        return state.state
    return state


def tmsv_marginal(nbar: float) -> SignedThermalMixture:
    """Signal (or idler) mode of the TMSV observed alone: thermal with mean nbar."""
    if not (nbar >= 0.0):
        raise ValueError(f"mean photon number must be nonnegative, got {nbar}")
    return SignedThermalMixture.thermal(nbar)


def squeezing_to_mean(r: float) -> float:
    """Convert a squeezing amplitude to the per-mode mean photon number sinh^2(r)."""
    return math.sinh(r) ** 2


def scaled_component_mean(nbar: float, efficiency: float, detectors: int, l: int) -> float:
    """Thermal mean of the l-th component of a heralded state.

    Measuring the idler with the no-click operator of strength
    s = eta*(1 - l/N) reshapes the signal thermal mean to
    (nbar - nbar*s) / (1 + nbar*s).
    """
    s = efficiency * (detectors - l) / detectors
    return (nbar - nbar * s) / (1.0 + nbar * s)


def herald_state(nbar: float, efficiency: float, detectors: int, clicks: int) -> HeraldedState:
    """Signal state conditioned on k clicks from an N-detector idler multiplex.

    The conditioned state is an exact signed mixture of ``clicks + 1`` thermal
    states: component l has mean ``scaled_component_mean(nbar, eta, N, l)`` and
    weight proportional to ``C(k, l) * (-1)^(k-l) * (1 + mean_l)``.  The
    normalization of those weights also fixes the heralding probability,
    ``Pr_{N,k} = C(N,k) * sum_of_terms / (1 + nbar)``, which equals the click
    probability of an N-multiplex observing the thermal idler directly.
    """
    if not (nbar >= 0.0):
        raise ValueError(f"mean photon number must be nonnegative, got {nbar}")
    if not (0.0 <= efficiency <= 1.0):
        raise ValueError(f"efficiency must lie in [0, 1], got {efficiency}")
    if detectors < 1:
        raise ValueError(f"need at least one detector, got {detectors}")
    if not (0 <= clicks <= detectors):
        raise ValueError(f"clicks must lie in [0, {detectors}], got {clicks}")

    means = [scaled_component_mean(nbar, efficiency, detectors, l) for l in range(clicks + 1)]
    terms = [
        math.comb(clicks, l) * (-1) ** (clicks - l) * (1.0 + means[l])
        for l in range(clicks + 1)
    ]
    denom = math.fsum(terms)
    if abs(denom) < 1e-300:
        raise DegenerateHeraldingError(
            f"herald normalization vanished for nbar={nbar}, eta={efficiency}, "
            f"N={detectors}, k={clicks}"
        )

    weights = [t / denom for t in terms]
    # Absorb the division-rounding residual into the smallest-magnitude weight,
    # where one ulp is finest, so the stored trace is exactly one whenever
    # doubles permit.
    j = min(range(len(weights)), key=lambda i: abs(weights[i]))
    for _ in range(4):
        residual = math.fsum(weights) - 1.0
        if residual == 0.0:
            break
        adjusted = weights[j] - residual
        if adjusted == weights[j]:
            break
        weights[j] = adjusted

    probability = math.comb(detectors, clicks) * denom / (1.0 + nbar)
    probability = min(1.0, max(0.0, probability))

    mixture = SignedThermalMixture(
        tuple(ThermalComponent(w, m) for w, m in zip(weights, means))
    )
    return HeraldedState(
        state=mixture,
        herald_probability=probability,
        params=HeraldParams(nbar, efficiency, detectors, clicks),
    )


def mean_photon(state) -> float:
    """First moment of the photon number operator."""
    st = _unwrap(state)
    if isinstance(st, SignedThermalMixture):
        return math.fsum(c.weight * c.mean for c in st.components)
    if isinstance(st, DisplacedThermal):
        return st.coherent_mean + st.thermal_mean
    raise UnsupportedStateError(f"mean_photon undefined for {type(st).__name__}")


def second_moment(state) -> float:
    """Second moment <n^2>; for a thermal component it is 2m^2 + m."""
    st = _unwrap(state)
    if isinstance(st, SignedThermalMixture):
        return math.fsum(c.weight * (2.0 * c.mean**2 + c.mean) for c in st.components)
    if isinstance(st, DisplacedThermal):
        mu, m = st.coherent_mean, st.thermal_mean
        variance = mu * (1.0 + 2.0 * m) + m * (1.0 + m)
        mean = mu + m
        return variance + mean**2
    raise UnsupportedStateError(f"second_moment undefined for {type(st).__name__}")


def fano_factor(state) -> float:
    """Photon-number variance divided by the mean; < 1 flags sub-Poissonian light."""
    mean = mean_photon(state)
    if mean <= 0.0:
        raise ValueError("Fano factor is undefined for zero mean photon number")
    return (second_moment(state) - mean**2) / mean


def _mixture_distribution(weights: np.ndarray, means: np.ndarray, n_max: int) -> np.ndarray:
    # Accumulate in extended precision: near-degenerate heralds carry weights of
    # magnitude ~1e7, and the signed sum must cancel to ~1e-12 absolute.
    n = np.arange(n_max + 1)
    w = weights.astype(np.longdouble)
    m = means.astype(np.longdouble)
    ratios = np.where(m > 0.0, m / (1.0 + m), np.longdouble(0.0))
    # p_n per component: m^n / (1+m)^(n+1); vacuum component contributes only n=0.
    comp = ratios[:, None] ** n[None, :] / (1.0 + m)[:, None]
    vacuum = m == 0.0
    if np.any(vacuum):
        comp[vacuum] = 0.0
        comp[vacuum, 0] = 1.0
    return (w @ comp).astype(float)


def photon_number_distribution(state, n_max: int) -> np.ndarray:
    """Photon-number probabilities p_0 .. p_{n_max}.

    Only signed thermal mixtures have a closed form here; displaced thermal
    distributions live in the oracle's Fock construction.
    """
    if n_max < 0:
        raise ValueError(f"n_max must be nonnegative, got {n_max}")
    st = _unwrap(state)
    if isinstance(st, DisplacedThermal):
        raise UnsupportedStateError(
            "displaced thermal photon distributions are computed by "
            "oracle.displaced_thermal_diag"
        )
    if not isinstance(st, SignedThermalMixture):
        raise UnsupportedStateError(f"no distribution for {type(st).__name__}")
    return _mixture_distribution(st.weights, st.means, n_max)


def wigner_slice(state, q_grid) -> np.ndarray:
    """W(q, 0) for a signed thermal mixture.

    Convention: W_vac(q, p) = exp(-q^2 - p^2) / pi, so a thermal component of
    mean m contributes w * exp(-q^2 / (2m + 1)) / (pi * (2m + 1)) and the full
    2-D integral of each component equals its weight.
    """
    st = _unwrap(state)
    if not isinstance(st, SignedThermalMixture):
        raise UnsupportedStateError("wigner_slice is defined for signed thermal mixtures")
    q = np.atleast_1d(np.asarray(q_grid, dtype=float))
    widths = 2.0 * st.means + 1.0
    gauss = np.exp(-np.square(q)[None, :] / widths[:, None])
    return (st.weights / (np.pi * widths)) @ gauss
