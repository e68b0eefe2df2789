"""Shared numerical kernels: grid quadrature, dense eigensolvers, root scanning."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.linalg import lapack, solve_triangular


class EigenSolverError(RuntimeError):
    pass


class NotPositiveDefiniteError(EigenSolverError):
    """Raised when the right-hand matrix of a pencil fails to factor."""

    def __init__(self, pivot: int):
        super().__init__(
            f"B is not positive definite (Cholesky failed at pivot {pivot}); "
            "the trial set is degenerate or linearly dependent"
        )
        self.pivot = pivot


@dataclass(frozen=True)
class Grid:
    """Quadrature nodes x(s) on [-L, L] for a uniform parameter s in [0, 1].

    ``jac`` holds dx/ds at the nodes. The identity map gives the plain
    uniform grid; graded maps cluster nodes where the density varies fast.
    """

    x: np.ndarray
    jac: np.ndarray
    ds: float

    @property
    def size(self) -> int:
        return self.x.size

    @property
    def half_length(self) -> float:
        return 0.5 * (self.x[-1] - self.x[0])

    @classmethod
    def uniform(cls, n_points: int, half_length: float = 0.5) -> "Grid":
        if n_points < 3:
            raise ValueError("a quadrature grid needs at least 3 points")
        x = np.linspace(-half_length, half_length, n_points)
        jac = np.full(n_points, 2.0 * half_length)
        return cls(x, jac, 1.0 / (n_points - 1))

    @classmethod
    def mapped(
        cls,
        n_points: int,
        x_of_s: Callable[[np.ndarray], np.ndarray],
        dx_ds: Callable[[np.ndarray], np.ndarray],
    ) -> "Grid":
        if n_points < 3:
            raise ValueError("a quadrature grid needs at least 3 points")
        s = np.linspace(0.0, 1.0, n_points)
        return cls(np.asarray(x_of_s(s), float), np.asarray(dx_ds(s), float), 1.0 / (n_points - 1))


def _increments_trapezoid(g: np.ndarray, ds: float) -> np.ndarray:
    return 0.5 * ds * (g[:-1] + g[1:])


def _increments_quartic(g: np.ndarray, ds: float) -> np.ndarray:
    # cell integrals of the cubic through four neighbouring nodes
    m = g.size
    if m < 4:
        return _increments_trapezoid(g, ds)
    inc = np.empty(m - 1)
    inc[1:-1] = (-g[:-3] + 13.0 * g[1:-2] + 13.0 * g[2:-1] - g[3:]) * (ds / 24.0)
    inc[0] = (9.0 * g[0] + 19.0 * g[1] - 5.0 * g[2] + g[3]) * (ds / 24.0)
    inc[-1] = (g[-4] - 5.0 * g[-3] + 19.0 * g[-2] + 9.0 * g[-1]) * (ds / 24.0)
    return inc


def cumulative_integral(f: np.ndarray, grid: Grid, order: int = 4) -> np.ndarray:
    """Return F(x_k) = integral of f from -L to x_k, with F(-L) = 0.

    ``order=2`` is the composite trapezoid rule; ``order=4`` replaces each cell
    by the integral of the local cubic interpolant (same stencil everywhere,
    one-sided in the first and last cell).
    """
    f = np.asarray(f, float)
    if f.shape != grid.x.shape:
        raise ValueError(f"samples have shape {f.shape}, grid has {grid.x.shape}")
    if f.size < 3:
        raise ValueError("cumulative integral needs at least 3 samples")
    g = f * grid.jac
    if order == 2:
        inc = _increments_trapezoid(g, grid.ds)
    elif order == 4:
        inc = _increments_quartic(g, grid.ds)
    else:
        raise ValueError("order must be 2 or 4")
    out = np.empty_like(g)
    out[0] = 0.0
    np.cumsum(inc, out=out[1:])
    return out


def integrate(f: np.ndarray, grid: Grid, order: int = 4) -> float:
    """Integral of the samples over the whole grid."""
    f = np.asarray(f, float)
    if f.shape != grid.x.shape:
        raise ValueError(f"samples have shape {f.shape}, grid has {grid.x.shape}")
    if f.size < 3:
        raise ValueError("integration needs at least 3 samples")
    g = f * grid.jac
    if order == 2:
        return float(np.sum(_increments_trapezoid(g, grid.ds)))
    if order == 4:
        return float(np.sum(_increments_quartic(g, grid.ds)))
    raise ValueError("order must be 2 or 4")


def derivative(f: np.ndarray, grid: Grid) -> np.ndarray:
    """df/dx at the nodes from a quintic interpolating spline in the grid
    coordinate, divided by the map's Jacobian."""
    f = np.asarray(f, float)
    s = np.arange(f.size) * grid.ds
    return make_interp_spline(s, f, k=5).derivative()(s) / grid.jac


class SymmetricMatrix(np.ndarray):
    """Dense ndarray whose symmetry is enforced once at construction."""

    def __new__(cls, entries):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("a symmetric matrix must be square")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix has non-finite entries")
        a = 0.5 * (a + a.T)
        return a.view(cls)

    @property
    def order(self) -> int:
        return self.shape[0]


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray


def eigensolve_symmetric(m, tol: float = 1e-10) -> EigenDecomposition:
    """Full spectrum of a dense symmetric matrix, eigenvalues ascending.

    Backed by LAPACK ``syevd``; the residual of every pair is checked against
    ``tol`` times the matrix norm.
    """
    a = SymmetricMatrix(m)
    w, v = np.linalg.eigh(np.asarray(a))
    res = np.linalg.norm(a @ v - v * w, axis=0)
    scale = max(np.abs(w).max(initial=0.0), 1e-300)
    worst = res.max(initial=0.0)
    if worst > tol * scale:
        raise EigenSolverError(f"eigensolver residual {worst:.3e} exceeds tolerance")
    return EigenDecomposition(w, v, res)


def eigensolve_generalized(a, b) -> EigenDecomposition:
    """Eigenpairs of the symmetric-definite pencil A v = lambda B v.

    B is Cholesky-factored (B = C C^T), the reduced problem
    C^-1 A C^-T y = lambda y is solved, and v = C^-T y is returned with
    v^T B v = 1.
    """
    a = np.asarray(SymmetricMatrix(a))
    b = np.asarray(SymmetricMatrix(b))
    if a.shape != b.shape:
        raise ValueError("A and B must have the same order")
    c, info = lapack.dpotrf(b, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefiniteError(info - 1)
    if info < 0:
        raise EigenSolverError(f"dpotrf argument error {info}")
    t = solve_triangular(c, a, lower=True)
    red = solve_triangular(c, t.T, lower=True)
    red = 0.5 * (red + red.T)
    w, y = np.linalg.eigh(red)
    v = solve_triangular(c.T, y, lower=False)
    res = np.linalg.norm(a @ v - (b @ v) * w, axis=0)
    return EigenDecomposition(w, v, res)


@dataclass(frozen=True)
class RootBracket:
    a: float
    b: float
    fa: float
    fb: float

    def __post_init__(self):
        if np.sign(self.fa) == np.sign(self.fb) and self.fa != 0 and self.fb != 0:
            raise ValueError("bracket ends must have residuals of opposite sign")


def bisect(residual: Callable[[float], float], bracket: RootBracket, tol: float,
           max_iter: int = 200) -> float:
    a, b, fa = bracket.a, bracket.b, bracket.fa
    if bracket.fa == 0:
        return a
    if bracket.fb == 0:
        return b
    for _ in range(max_iter):
        if b - a <= tol:
            break
        mid = 0.5 * (a + b)
        fm = residual(mid)
        if fm == 0:
            return mid
        if np.sign(fm) == np.sign(fa):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


def scan_brackets(residual: Callable[[float], float], a: float, b: float,
                  n_scan: int) -> list[RootBracket]:
    ts = np.linspace(a, b, n_scan + 1)
    fs = [residual(t) for t in ts]
    out = []
    for i in range(n_scan):
        if fs[i] == 0:
            out.append(RootBracket(ts[i], ts[i], 0.0, 0.0))
        elif fs[i + 1] != 0 and np.sign(fs[i]) != np.sign(fs[i + 1]):
            out.append(RootBracket(ts[i], ts[i + 1], fs[i], fs[i + 1]))
    if fs[-1] == 0:
        out.append(RootBracket(ts[-1], ts[-1], 0.0, 0.0))
    return out


def find_roots(residual: Callable[[float], float], scan: Sequence[float],
               n_scan: int = 64, tol: float = 1e-12) -> list[float]:
    """Locate sign changes of ``residual`` on ``n_scan`` equal subintervals
    and bisect each bracket down to width ``tol``. Roots come back ascending.
    """
    if n_scan < 8:
        raise ValueError("n_scan must be at least 8")
    a, b = float(scan[0]), float(scan[1])
    roots = [bisect(residual, br, tol) for br in scan_brackets(residual, a, b, n_scan)]
    return sorted(roots)
