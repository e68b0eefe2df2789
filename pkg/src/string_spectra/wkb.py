"""WKB (Weyl) asymptotics: E_n ~ eps_n / <sqrt rho>^2 and the matching modes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .density import DensityProfile, eval_density


@dataclass(frozen=True)
class PhaseIntegral:
    """Phi(x) = int_{-L}^x sqrt(rho); closed form when the profile has one,
    otherwise a cubic Hermite fit on an 8192-point grid."""

    profile: DensityProfile = field(repr=False)

    @property
    def total(self) -> float:
        return float(self(self.profile.half_length))

    def __call__(self, x):
        L = self.profile.half_length
        xa = np.asarray(x, float)
        if np.any(np.abs(xa) > L * (1 + 1e-12)):
            raise ValueError("x outside [-L, L]")
        return self.profile.phase(np.clip(xa, -L, L))


def wkb_energy(n: int, profile: DensityProfile) -> float:
    """Weyl estimate eps_n / <sqrt rho>^2, exact for the uniform and Borg strings."""
    if n < 1:
        raise ValueError("mode index must be >= 1")
    L = profile.half_length
    eps = (n * np.pi / (2 * L)) ** 2
    return eps / profile.moments.mean_sqrt ** 2


def wkb_wavefunction(n: int, profile: DensityProfile, x, phase: PhaseIntegral | None = None):
    """(Phi(L)/2)^{-1/2} rho^{-1/4} sin(n pi Phi(x)/Phi(L)).

    The prefactor makes the mode rho-normalised in the large-n limit.
    """
    if n < 1:
        raise ValueError("mode index must be >= 1")
    phase = phase or PhaseIntegral(profile)
    total = phase.total
    xa = np.asarray(x, float)
    s = np.sin(n * np.pi * phase(xa) / total)
    return s * eval_density(profile, xa) ** -0.25 / np.sqrt(total / 2)
