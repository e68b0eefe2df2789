"""Collocation on Little Sinc Functions (LSF) with Dirichlet ends.

The second-derivative matrix is universal for a given (N, L) and is built
once from the sine expansion of the LSF; a density only enters through the
diagonal scaling of the symmetrized operator
-rho^{-1/2} d^2/dx^2 rho^{-1/2}.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from .density import DensityProfile, SampledDensity, sample_density
from .numerics import SymmetricMatrix, eigensolve_symmetric


@dataclass(frozen=True)
class LsfGrid:
    N: int
    L: float = 0.5

    def __post_init__(self):
        if self.N % 2 or self.N < 8:
            raise ValueError("N must be even and at least 8")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.N // 2 + 1, self.N // 2)

    @property
    def x(self) -> np.ndarray:
        return 2.0 * self.L * self.indices / self.N


def uniform_modes(n: np.ndarray, x: np.ndarray, L: float) -> np.ndarray:
    """Unit-density string modes sin(n pi (x+L)/2L)/sqrt(L), shape (len(n), len(x))."""
    n = np.atleast_1d(n)
    x = np.atleast_1d(np.asarray(x, float))
    return np.sin(np.outer(n, x + L) * (np.pi / (2 * L))) / np.sqrt(L)


def _sine_table(N: int) -> np.ndarray:
    # sqrt(L) psi_n(x_k) for n = 1..N-1 and grid index j = k + N/2 = 1..N-1
    j = np.arange(1, N)
    return np.sin(np.outer(j, j) * (np.pi / N))


def lsf_value(k: int, grid: LsfGrid, x):
    """Value of the k-th little sinc function at x (closed form)."""
    N, L = grid.N, grid.L
    if not -N // 2 < k < N // 2:
        raise IndexError(f"LSF index {k} outside {-N // 2 + 1}..{N // 2 - 1}")
    xa = np.asarray(x, float)
    if np.any(np.abs(xa) > L * (1 + 1e-12)):
        raise ValueError("x outside [-L, L]")
    sk = np.sin(np.pi * k / N)
    den = np.sin(np.pi * xa / (2 * L)) - sk
    num = (-1) ** (k % 2) / N * np.cos(np.pi * k / N) * np.sin(N * np.pi * xa / (2 * L))
    near = np.abs(den) < 1e-9
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(near, 0.0, num / np.where(near, 1.0, den))
    if np.any(near):
        out = np.where(near, lsf_value_sum(k, grid, xa), out)
    return float(out) if out.ndim == 0 else out


def lsf_value_sum(k: int, grid: LsfGrid, x):
    """The same function from its sine expansion h sum_n psi_n(x) psi_n(x_k)."""
    N, L = grid.N, grid.L
    n = np.arange(1, N + 1)
    xk = 2.0 * L * k / N
    xa = np.asarray(x, float)
    vals = grid.h * (uniform_modes(n, xa.ravel(), L).T @ uniform_modes(n, [xk], L)[:, 0])
    return vals.reshape(xa.shape) if xa.ndim else float(vals[0])


@lru_cache(maxsize=8)
def second_derivative_matrix(N: int, L: float = 0.5) -> np.ndarray:
    """c2[k, j] = s_k''(x_j), exact from the sine expansion; cached per (N, L).

    The returned array is read-only and shared between callers.
    """
    grid = LsfGrid(N, L)
    s = _sine_table(N)
    n = np.arange(1, N)
    eps = (n * np.pi / (2 * L)) ** 2
    c2 = -(grid.h / L) * (s.T * eps) @ s
    c2 = 0.5 * (c2 + c2.T)
    c2.setflags(write=False)
    return c2


@lru_cache(maxsize=8)
def inverse_second_derivative_matrix(N: int, L: float = 0.5) -> np.ndarray:
    """(-c2)^{-1} from the same expansion, using S^2 = (N/2) I for the sine table."""
    grid = LsfGrid(N, L)
    s = _sine_table(N)
    n = np.arange(1, N)
    eps = (n * np.pi / (2 * L)) ** 2
    g = (L / grid.h) * (2.0 / N) ** 2 * (s.T / eps) @ s
    g = 0.5 * (g + g.T)
    g.setflags(write=False)
    return g


def assemble_symmetrized(density: SampledDensity, grid: LsfGrid) -> SymmetricMatrix:
    """O_sym[k, k'] = -c2[k, k'] / sqrt(rho_k rho_k')."""
    if density.x.shape != (grid.N - 1,) or not np.allclose(density.x, grid.x, rtol=0, atol=1e-14):
        raise ValueError("density is not sampled on the collocation grid")
    inv = 1.0 / density.sqrt_rho
    c2 = second_derivative_matrix(grid.N, grid.L)
    return SymmetricMatrix(-(inv[:, None] * c2) * inv[None, :])


@dataclass(frozen=True)
class CollocationSpectrum:
    energies: np.ndarray
    modes: np.ndarray  # (n_modes, N-1), rho-weighted normalised physical modes
    grid: LsfGrid
    rho: np.ndarray
    profile: DensityProfile | None = None

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def gram(self) -> np.ndarray:
        """Discrete rho-weighted Gram matrix of the stored modes."""
        w = self.rho * self.grid.h
        return (self.modes * w) @ self.modes.T


def solve_spectrum(profile: DensityProfile, N: int = 2000, n_modes: int | None = None) -> CollocationSpectrum:
    """Lowest ``n_modes`` eigenpairs of -psi'' = E rho psi on the LSF grid.

    Modes are normalised so that sum_k psi(x_k)^2 rho(x_k) h = 1, with the
    first interior sample positive.
    """
    grid = LsfGrid(N, profile.half_length)
    if n_modes is None:
        n_modes = N - 1
    if not 1 <= n_modes <= N - 1:
        raise ValueError(f"n_modes must lie in 1..{N - 1}")
    dens = sample_density(profile, grid.x)
    # Diagonalise the inverse operator sqrt(rho) (-c2)^{-1} sqrt(rho): same
    # eigenvectors, but the low modes no longer lose digits to the
    # O(N^2 max 1/rho) norm of the forward matrix.
    g = inverse_second_derivative_matrix(N, grid.L)
    sq = dens.sqrt_rho
    dec = eigensolve_symmetric((sq[:, None] * g) * sq[None, :], tol=1e-9)
    mu = dec.eigenvalues[::-1][:n_modes]
    phi = dec.eigenvectors[:, ::-1][:, :n_modes].T
    modes = phi / (dens.sqrt_rho * np.sqrt(grid.h))
    signs = np.where(modes[:, 0] < 0, -1.0, 1.0)
    modes = modes * signs[:, None]
    return CollocationSpectrum(1.0 / mu, modes, grid, dens.rho, profile)


def interpolate_mode(spectrum: CollocationSpectrum, n: int, x):
    """psi_n at arbitrary x: LSF interpolation of sqrt(rho) psi_n, then rescaled.

    ``n`` is 1-based.
    """
    if not 1 <= n <= spectrum.modes.shape[0]:
        raise IndexError(f"mode {n} not computed (have {spectrum.modes.shape[0]})")
    grid = spectrum.grid
    L = grid.L
    xa = np.asarray(x, float)
    if np.any(np.abs(xa) > L * (1 + 1e-12)):
        raise ValueError("x outside [-L, L]")
    phi = spectrum.modes[n - 1] * np.sqrt(spectrum.rho)
    s = _sine_table(grid.N) / np.sqrt(L)
    coef = grid.h * (s @ phi)
    basis = uniform_modes(np.arange(1, grid.N), xa.ravel(), L)
    phi_x = coef @ basis
    if spectrum.profile is not None:
        rho_x = np.asarray(spectrum.profile.rho_fn(xa.ravel()), float)
    else:
        rho_x = CubicSpline(grid.x, spectrum.rho)(xa.ravel())
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(phi_x == 0, 0.0, phi_x / np.sqrt(rho_x))
    # node values come back exactly
    idx = np.rint((xa.ravel() / (2 * L)) * grid.N).astype(int)
    on = (np.abs(idx) < grid.N // 2) & np.isclose(xa.ravel(), 2 * L * idx / grid.N, rtol=0, atol=1e-15)
    out[on] = spectrum.modes[n - 1][idx[on] + grid.N // 2 - 1]
    return out.reshape(xa.shape) if xa.ndim else float(out[0])
