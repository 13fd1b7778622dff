"""Click statistics of a multiplexed on/off photodetector.

A single mode split evenly over N identical binary detectors of total
efficiency eta has N+1 outcomes (k = 0 .. N simultaneous clicks).  The outcome
operators expand into normally ordered exponentials, so the probability of any
outcome on our state models reduces to the alternating sum

    Pr_{N,k}(rho) = C(N,k) * sum_{l=0}^{k} C(k,l) (-1)^(k-l) <:exp(-s_l n):>,
    s_l = eta * (1 - l/N),

with the normally ordered moment available in closed form for both thermal
mixtures and displaced thermal states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NumericalInstabilityError, UnsupportedStateError
from .numerics import MAX_ALTERNATING_TERMS, binomial, clamp_probability
from .states import DisplacedThermal, HeraldedState, SignedThermalMixture, StateModel

__all__ = [
    "ClickMultiplex",
    "binomial",
    "normal_ordered_moment",
    "click_probability",
    "click_distribution",
    "poisson_limit_reference",
    "povm_fock_diagonal",
]


@dataclass(frozen=True)
class ClickMultiplex:
    """N identical on/off detectors sharing one mode, with common efficiency eta.

    Outcome counts (``clicks`` arguments below) are capped at 64 alternating
    terms for numerical stability; detector counts beyond 64 are allowed so the
    large-N Poisson limit can be probed at small click numbers.
    """

    detector_count: int
    efficiency: float

    def __post_init__(self):
        if self.detector_count < 1:
            raise ValueError(f"need at least one detector, got {self.detector_count}")
        if not (0.0 <= self.efficiency <= 1.0):
            raise ValueError(f"efficiency must lie in [0, 1], got {self.efficiency}")


def _unwrap(state) -> StateModel:
    if isinstance(state, HeraldedState):
        return state.state
    return state


def normal_ordered_moment(state, s: float) -> float:
    """Normally ordered exponential moment <:exp(-s n):>.

    Thermal component of mean m contributes 1 / (1 + s m); a displaced thermal
    state gives exp(-s mu / (1 + s m)) / (1 + s m).
    """
    if not (0.0 <= s <= 1.0):
        raise ValueError(f"moment parameter must lie in [0, 1], got {s}")
    st = _unwrap(state)
    if isinstance(st, SignedThermalMixture):
        return math.fsum(c.weight / (1.0 + s * c.mean) for c in st.components)
    if isinstance(st, DisplacedThermal):
        denom = 1.0 + s * st.thermal_mean
        return math.exp(-s * st.coherent_mean / denom) / denom
    raise UnsupportedStateError(f"no moment rule for {type(st).__name__}")


def _validate_outcome(multiplex: ClickMultiplex, clicks: int) -> None:
    if not (0 <= clicks <= multiplex.detector_count):
        raise ValueError(
            f"clicks must lie in [0, {multiplex.detector_count}], got {clicks}"
        )
    if clicks > MAX_ALTERNATING_TERMS:
        raise ValueError(
            f"click counts beyond {MAX_ALTERNATING_TERMS} exceed the stable "
            f"alternating-sum range, got {clicks}"
        )


def _thermal_outcome_value(mean: float, detector_count: int, clicks: int, efficiency: float) -> float:
    """Exact Pr_{N,k} for a single thermal state, via rational arithmetic.

    The alternating sum is a k-th finite difference of O(1) terms whose value
    can sit far below double-precision resolution (e.g. N = 1e4, k = 4 leaves
    a difference of order 1e-16), so it is evaluated exactly over the
    rationals of the rounded float inputs and converted once at the end.
    """
    m = Fraction(float(mean))
    e = Fraction(float(efficiency))
    total = Fraction(0)
    for l in range(clicks + 1):
        s = e * Fraction(detector_count - l, detector_count)
        term = Fraction(math.comb(clicks, l)) / (1 + s * m)
        total += term if (clicks - l) % 2 == 0 else -term
    return float(math.comb(detector_count, clicks) * total)


def click_probability(multiplex: ClickMultiplex, clicks: int, state) -> float:
    """Probability of exactly ``clicks`` simultaneous clicks on the multiplex."""
    _validate_outcome(multiplex, clicks)
    st = _unwrap(state)
    n, eta = multiplex.detector_count, multiplex.efficiency
    if isinstance(st, SignedThermalMixture):
        raw = math.fsum(
            c.weight * _thermal_outcome_value(c.mean, n, clicks, eta)
            for c in st.components
        )
    elif isinstance(st, DisplacedThermal):
        terms = [
            (-1) ** (clicks - l)
            * math.comb(clicks, l)
            * normal_ordered_moment(st, eta * (n - l) / n)
            for l in range(clicks + 1)
        ]
        raw = math.comb(n, clicks) * math.fsum(terms)
    else:
        raise UnsupportedStateError(f"no click rule for {type(st).__name__}")
    return clamp_probability(raw)


def click_distribution(multiplex: ClickMultiplex, state) -> np.ndarray:
    """All N+1 outcome probabilities; they must sum to one (POVM completeness)."""
    probs = np.array(
        [click_probability(multiplex, k, state) for k in range(multiplex.detector_count + 1)]
    )
    st = _unwrap(state)
    scale = 1.0
    if isinstance(st, SignedThermalMixture):
        scale = max(1.0, float(np.sum(np.abs(st.weights))))
    total = math.fsum(probs.tolist())
    if abs(total - 1.0) > 1e-12 * scale:
        raise NumericalInstabilityError(
            f"click distribution sums to {total!r}, completeness lost"
        )
    return probs


def poisson_limit_reference(clicks: int, efficiency: float, state) -> float:
    """Large-N limit of the click distribution: <:(eta n)^k exp(-eta n) / k!:>.

    For a thermal component of mean m the closed form is
    (eta m)^k / (1 + eta m)^(k+1).  Used as the convergence target when
    checking that finite multiplexes become Poissonian.
    """
    if clicks < 0:
        raise ValueError(f"click count must be nonnegative, got {clicks}")
    if not (0.0 <= efficiency <= 1.0):
        raise ValueError(f"efficiency must lie in [0, 1], got {efficiency}")
    st = _unwrap(state)
    if not isinstance(st, SignedThermalMixture):
        raise UnsupportedStateError(
            "poisson_limit_reference supports thermal mixtures only"
        )
    total = math.fsum(
        c.weight * (efficiency * c.mean) ** clicks / (1.0 + efficiency * c.mean) ** (clicks + 1)
        for c in st.components
    )
    return clamp_probability(total)


def povm_fock_diagonal(detector_count: int, clicks: int, efficiency: float, n_max: int) -> np.ndarray:
    """Diagonal Fock coefficients of the k-click POVM element, n = 0 .. n_max.

    Coefficient at n is C(N,k) * sum_l C(k,l) (-1)^(k-l) [1 - eta(1 - l/N)]^n.
    For n < k it vanishes identically (a k-th finite difference of a degree-n
    polynomial; physically, n photons cannot fire more than n detectors), so
    those entries are exactly zero.
    """
    if detector_count < 1:
        raise ValueError(f"need at least one detector, got {detector_count}")
    if not (0 <= clicks <= detector_count):
        raise ValueError(f"clicks must lie in [0, {detector_count}], got {clicks}")
    if clicks > MAX_ALTERNATING_TERMS:
        raise ValueError(f"click counts beyond {MAX_ALTERNATING_TERMS} are unstable")
    if n_max < 0:
        raise ValueError(f"n_max must be nonnegative, got {n_max}")

    prefactor = math.comb(detector_count, clicks)
    signs = [(-1) ** (clicks - l) * math.comb(clicks, l) for l in range(clicks + 1)]
    xs = np.array(
        [1.0 - efficiency * (detector_count - l) / detector_count for l in range(clicks + 1)]
    )
    coeffs = np.zeros(n_max + 1)
    powers = xs[None, :] ** np.arange(n_max + 1)[:, None]
    for n in range(clicks, n_max + 1):
        value = prefactor * math.fsum(s * p for s, p in zip(signs, powers[n]))
        coeffs[n] = clamp_probability(value)
    return coeffs
