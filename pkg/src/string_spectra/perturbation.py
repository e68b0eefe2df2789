"""Density perturbation theory around the uniform string.

The density is split as rho = rho0 (1 + sigma) with zero-mean sigma and the
symmetrized operator is expanded in powers of sigma; energies follow from
Rayleigh-Schrodinger theory in the basis of uniform-string modes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .density import DensityProfile

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PTBasis:
    half_length: float
    kmax: int

    def __post_init__(self):
        if self.kmax < 2:
            raise ValueError("kmax must be >= 2")

    @property
    def energies(self) -> np.ndarray:
        """Unperturbed eps_n = n^2 pi^2 / 4L^2 for n = 1..kmax."""
        n = np.arange(1, self.kmax + 1)
        return (n * np.pi / (2 * self.half_length)) ** 2

    def functions(self, x) -> np.ndarray:
        """psi_n(x) for n = 1..kmax, shape (kmax, len(x))."""
        L = self.half_length
        x = np.atleast_1d(np.asarray(x, float))
        n = np.arange(1, self.kmax + 1)
        return np.sin(np.outer(n, x + L) * (np.pi / (2 * L))) / math.sqrt(L)


@dataclass(frozen=True)
class SigmaMatrix:
    elements: np.ndarray  # <n|sigma|k>, n, k = 1..kmax stored 0-based
    nodes: int
    refinement_error: float

    def __getitem__(self, nk):
        n, k = nk
        return self.elements[n - 1, k - 1]


def _gauss(L: float, m: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(m)
    return L * t, L * w


def _sigma_elements(sig, basis: PTBasis, m: int) -> np.ndarray:
    x, w = _gauss(basis.half_length, m)
    f = basis.functions(x)
    e = (f * (w * sig(x))) @ f.T
    return 0.5 * (e + e.T)


def sigma_matrix(profile: DensityProfile, kmax: int, nodes: int | None = None) -> SigmaMatrix:
    """All <n|sigma|k> for n, k <= kmax by Gauss-Legendre quadrature.

    The node count is doubled once as a refinement check; a disagreement
    above 1e-10 raises, naming the worst (n, k).
    """
    basis = PTBasis(profile.half_length, kmax)
    rho0 = profile.rho0

    def sig(x):
        return np.asarray(profile.rho_fn(x), float) / rho0 - 1.0

    m = nodes or max(256, 4 * kmax + 64)
    coarse = _sigma_elements(sig, basis, m)
    fine = _sigma_elements(sig, basis, 2 * m)
    diff = np.abs(fine - coarse)
    err = float(diff.max())
    if err > 1e-10:
        n, k = np.unravel_index(np.argmax(diff), diff.shape)
        raise ArithmeticError(f"sigma matrix element ({n + 1}, {k + 1}) not converged ({err:.2e})")
    return SigmaMatrix(fine, 2 * m, err)


@dataclass
class PTReport:
    n: int
    rho0: float
    corrections: np.ndarray  # E^(0..order)
    partial_sums: np.ndarray
    resummed: float | None = None
    tail: float = 0.0
    warnings: list[str] = field(default_factory=list)

    @property
    def energy(self) -> float:
        return float(self.partial_sums[-1])


def frequency_denominators(basis: PTBasis) -> np.ndarray:
    """omega[n, k] = eps_n - eps_k (antisymmetric)."""
    eps = basis.energies
    return eps[:, None] - eps[None, :]


def pt_energy(n: int, order: int, sig: SigmaMatrix, basis: PTBasis, rho0: float) -> PTReport:
    """Energy corrections of mode n through ``order`` (0..3), each already
    divided by rho0; intermediate sums stop at kmax."""
    if not 0 <= order <= 3:
        raise ValueError("order must be 0..3")
    if not 1 <= n <= basis.kmax // 2:
        raise ValueError(f"mode {n} needs kmax >= {2 * n}")
    eps = basis.energies
    e_n = eps[n - 1]
    s = sig.elements
    i = n - 1
    snn = s[i, i]
    others = np.arange(basis.kmax) != i
    snk = s[i, others]
    w = e_n - eps[others]

    corr = [e_n]
    terms2 = snk ** 2 / w
    if order >= 1:
        corr.append(-e_n * snn)
    if order >= 2:
        corr.append(e_n * snn ** 2 + e_n ** 2 * terms2.sum())
    if order >= 3:
        skm = s[np.ix_(others, others)]
        v = snk / w
        double = v @ skm @ v
        corr.append(
            -e_n * snn ** 3
            + e_n ** 3 * snn * np.sum(snk ** 2 / w ** 2)
            - 3 * e_n ** 2 * snn * terms2.sum()
            - e_n ** 3 * double
        )
    corr = np.array(corr) / rho0
    rep = PTReport(n, rho0, corr, np.cumsum(corr))
    if order >= 2:
        # terms ~ 1/k^2: the tail beyond kmax is about kmax times the last term
        last = abs(e_n ** 2 * terms2[-1]) / rho0
        rep.tail = last * basis.kmax
        if rep.tail > 1e-8 * abs(rep.energy):
            rep.warnings.append(f"truncation tail {rep.tail:.2e} exceeds 1e-8 relative; raise kmax")
            log.warning("mode %d: %s", n, rep.warnings[-1])
    return rep


def diagonal_element(profile: DensityProfile, n: int, nodes: int | None = None) -> float:
    """<n|rho|n> by Gauss-Legendre quadrature."""
    L = profile.half_length
    m = nodes or max(256, 8 * n + 64)
    x, w = _gauss(L, m)
    f = np.sin(n * np.pi * (x + L) / (2 * L)) / math.sqrt(L)
    return float(np.sum(w * f * f * profile.rho_fn(x)))


def resummed_energy(n: int, profile: DensityProfile) -> float:
    """Diagonal (geometric-series) resummation eps_n / <n|rho|n>."""
    d = diagonal_element(profile, n)
    if not d > 0:
        raise ValueError("<n|rho|n> must be positive")
    return (n * np.pi / (2 * profile.half_length)) ** 2 / d


def pt_wavefunction_first_order(n: int, sig: SigmaMatrix, basis: PTBasis, x) -> np.ndarray:
    """|n> - 1/2 sum_{k != n} <k|sigma|n> (eps_n+eps_k)/(eps_n-eps_k) |k> at x.

    This is the eigenfunction of the symmetrized operator, i.e. sqrt(rho/rho0)
    times the physical mode to this order.
    """
    if not 1 <= n <= basis.kmax // 2:
        raise ValueError(f"mode {n} needs kmax >= {2 * n}")
    eps = basis.energies
    i = n - 1
    coef = -0.5 * sig.elements[:, i] * (eps[i] + eps) / np.where(np.arange(basis.kmax) == i, 1.0, eps[i] - eps)
    coef[i] = 1.0
    return coef @ basis.functions(x)


def asymptotic_second_order(mean_sigma_sq: float, mean_sigma: float = 0.0) -> float:
    """Large-n limit of rho0 E^(2)/eps_n: <sigma^2>/4 + 3 <sigma>^2/4."""
    return 0.25 * mean_sigma_sq + 0.75 * mean_sigma ** 2


def weyl_expansion(mean_sigma: float, mean_sigma_sq: float) -> tuple[float, float, float]:
    """Coefficients of eps_n/(rho0 <sqrt(1+sigma)>^2) to second order in sigma:
    (1, -<sigma>, <sigma^2>/4 + 3<sigma>^2/4)."""
    return 1.0, -mean_sigma, asymptotic_second_order(mean_sigma_sq, mean_sigma)
