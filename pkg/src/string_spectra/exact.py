"""Closed-form spectra: the uniform string and the Borg string."""

from __future__ import annotations

import numpy as np

from .density import DensityProfile


class NoExactSolution(ValueError):
    pass


def has_exact(profile: DensityProfile) -> bool:
    return profile.family in ("constant", "borg")


def exact_energy(profile: DensityProfile, n: int) -> float:
    """E_n for the constant and Borg families (the latter is isospectral to rho = 1)."""
    L = profile.half_length
    base = (n * np.pi / (2 * L)) ** 2
    if profile.family == "constant":
        return base / profile.params.get("value", 1.0)
    if profile.family == "borg":
        return base
    raise NoExactSolution(f"no closed-form spectrum for {profile.label}")


def exact_mode(profile: DensityProfile, n: int, x):
    """rho-normalised exact mode psi_n(x), positive near the left end."""
    L = profile.half_length
    xa = np.asarray(x, float)
    t = (xa + L) / (2 * L)
    if profile.family == "constant":
        c = profile.params.get("value", 1.0)
        return np.sin(n * np.pi * t) / np.sqrt(L * c)
    if profile.family == "borg":
        a = profile.params["alpha"]
        u = 1 + a * t
        return u * np.sin(n * np.pi * (1 + a) * t / u) / np.sqrt(L * (1 + a))
    raise NoExactSolution(f"no closed-form modes for {profile.label}")
