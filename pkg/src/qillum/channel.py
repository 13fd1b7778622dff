"""Target-interaction channel and Bayesian inference on receiver clicks.

A target of reflectivity kappa embedded in thermal background couples the
signal mode to the background mode on a beamsplitter; the background is
pre-scaled to nbar_b / (1 - kappa) so the received noise stays independent of
the reflectivity.  On our state models the whole channel acts in closed form:
every thermal component of mean m maps to a thermal of mean kappa*m + nbar_b
with its weight unchanged, and a displaced thermal maps affinely in both its
coherent and thermal parts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import UndefinedPosteriorError, UnsupportedStateError
from .povm import ClickMultiplex, click_probability
from .states import (
    DisplacedThermal,
    HeraldedState,
    SignedThermalMixture,
    StateModel,
    ThermalComponent,
    mean_photon,
)


@dataclass(frozen=True)
class TargetChannel:
    """Reflectivity and background mean defining the H0/H1 state pair."""

    reflectivity: float
    background_mean: float

    def __post_init__(self):
        if not (0.0 < self.reflectivity < 1.0):
            raise ValueError(
                f"reflectivity must lie strictly in (0, 1), got {self.reflectivity}"
            )
        if not (self.background_mean >= 0.0):
            raise ValueError(
                f"background mean must be nonnegative, got {self.background_mean}"
            )


@dataclass(frozen=True)
class HypothesisPair:
    """Receiver-side conditional states: target absent (h0) and present (h1)."""

    h0: SignedThermalMixture
    h1: StateModel


def background_state(channel: TargetChannel) -> SignedThermalMixture:
    """State reaching the receiver when the target is absent: pure background."""
    return SignedThermalMixture.thermal(channel.background_mean)


def apply_channel(channel: TargetChannel, signal) -> StateModel:
    """Return state for a present target: reflected signal plus background."""
    if isinstance(signal, HeraldedState):
        signal = signal.state
    kappa, nb = channel.reflectivity, channel.background_mean
    if isinstance(signal, SignedThermalMixture):
        return SignedThermalMixture(
            tuple(
                ThermalComponent(c.weight, kappa * c.mean + nb)
                for c in signal.components
            )
        )
    if isinstance(signal, DisplacedThermal):
        return DisplacedThermal(kappa * signal.coherent_mean, kappa * signal.thermal_mean + nb)
    raise UnsupportedStateError(f"channel undefined for {type(signal).__name__}")


def hypothesis_pair(channel: TargetChannel, signal) -> HypothesisPair:
    """Build the H0/H1 pair for a probe signal, checking mean conservation."""
    h0 = background_state(channel)
    h1 = apply_channel(channel, signal)
    expected = channel.reflectivity * mean_photon(signal) + channel.background_mean
    got = mean_photon(h1)
    if abs(got - expected) > 1e-9 * max(1.0, abs(expected)):
        raise AssertionError(f"channel mean drifted: {got} vs {expected}")
    return HypothesisPair(h0=h0, h1=h1)


def receiver_click_prob(receiver: ClickMultiplex, clicks: int, hyp_state) -> float:
    """Probability of ``clicks`` receiver clicks on a hypothesis state.

    This is the multiplex click probability evaluated on the (already
    channel-transformed) conditional state; for mixtures it is weight-linear
    over the transformed components, which avoids the doubly alternating sum.
    """
    return click_probability(receiver, clicks, hyp_state)


def posterior(prior_h1: float, likelihood_h0: float, likelihood_h1: float) -> float:
    """Bayes update for the target-present probability after one outcome."""
    for name, value in (
        ("prior_h1", prior_h1),
        ("likelihood_h0", likelihood_h0),
        ("likelihood_h1", likelihood_h1),
    ):
        if not (0.0 <= value <= 1.0) or not math.isfinite(value):
            raise ValueError(f"{name} must lie in [0, 1], got {value}")
    numerator = prior_h1 * likelihood_h1
    denominator = numerator + (1.0 - prior_h1) * likelihood_h0
    if denominator == 0.0:
        raise UndefinedPosteriorError("both hypothesis likelihoods are zero")
    return numerator / denominator
