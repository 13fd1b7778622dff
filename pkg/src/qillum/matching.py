"""Click-probability matching between thermal and coherent signals.

A single on/off detector clicks less often on a thermal beam than on a
coherent beam of equal mean photon number.  Matching raises the thermal mean
until the two single-click probabilities coincide, letting the thermal probe
run hotter without becoming more discoverable to a single-click eavesdropper.
Matching is defined against a single-click detector only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class MatchSpec:
    coherent_mean: float
    eavesdropper_efficiency: float

    def __post_init__(self):
        if not (self.coherent_mean >= 0.0):
            raise ValueError(f"coherent mean must be nonnegative, got {self.coherent_mean}")
        if not (0.0 < self.eavesdropper_efficiency <= 1.0):
            raise ValueError(
                "eavesdropper efficiency must lie in (0, 1], got "
                f"{self.eavesdropper_efficiency}"
            )


def coherent_click_prob(coherent_mean: float, efficiency: float) -> float:
    """Single-click probability of a coherent beam: 1 - exp(-eta * nbar_alpha)."""
    if coherent_mean < 0.0:
        raise ValueError(f"coherent mean must be nonnegative, got {coherent_mean}")
    if not (0.0 <= efficiency <= 1.0):
        raise ValueError(f"efficiency must lie in [0, 1], got {efficiency}")
    return -math.expm1(-efficiency * coherent_mean)


def thermal_click_prob(thermal_mean: float, efficiency: float) -> float:
    """Single-click probability of a thermal beam: eta*n / (1 + eta*n)."""
    if thermal_mean < 0.0:
        raise ValueError(f"thermal mean must be nonnegative, got {thermal_mean}")
    if not (0.0 <= efficiency <= 1.0):
        raise ValueError(f"efficiency must lie in [0, 1], got {efficiency}")
    x = efficiency * thermal_mean
    return x / (1.0 + x)


def matched_mean(spec: MatchSpec) -> float:
    """Thermal mean whose click probability equals the coherent one.

    Solves eta*n/(1 + eta*n) = 1 - exp(-eta*nbar_alpha) for n, giving
    n = (exp(eta*nbar_alpha) - 1) / eta.  Always >= nbar_alpha, with equality
    only at zero.
    """
    eta = spec.eavesdropper_efficiency
    return math.expm1(eta * spec.coherent_mean) / eta
