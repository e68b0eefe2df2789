"""Integral-operator iterations for the string modes.

Every iterate is carried as samples of xi = sqrt(rho) u together with the
exact slope u' that falls out of the nested integrals, so Rayleigh
quotients use the first-derivative form without numerical differencing.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import eval_gegenbauer, gammaln

from .density import SampledDensity
from .numerics import (
    NotPositiveDefiniteError,
    cumulative_integral,
    derivative,
    eigensolve_generalized,
    find_roots,
    integrate,
)

log = logging.getLogger(__name__)


class RankLossError(RuntimeError):
    def __init__(self, index: int, what: str = "trial function"):
        super().__init__(f"{what} {index} is linearly dependent on the previous ones")
        self.index = index


@dataclass
class Iterate:
    """One iterate: samples, slope of xi/sqrt(rho), the kappa constant and
    the norm the samples were divided by (1.0 when left raw)."""

    xi: np.ndarray
    slope: np.ndarray
    kappa: float
    norm: float = 1.0

    def scaled(self, c: float) -> "Iterate":
        return Iterate(self.xi * c, self.slope * c, self.kappa * c, self.norm / c)


@dataclass
class IterationTrace:
    index: int
    xi: np.ndarray
    kappa: float
    energy: float
    norm: float
    boundary_residual: float


@dataclass
class ModeSolution:
    energy: float
    x: np.ndarray
    psi: np.ndarray  # physical mode, integral of psi^2 rho = 1
    method: str
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)


@dataclass
class ShootingResult:
    endpoint: float
    iterations: int
    boundary_residual: float
    energy: float
    x: np.ndarray
    psi: np.ndarray


@dataclass
class PencilResult:
    energies: np.ndarray
    modes: list[ModeSolution]
    basis_size: int


def _span(dens: SampledDensity) -> np.ndarray:
    return dens.x - dens.x[0]


def _norm(xi: np.ndarray, dens: SampledDensity) -> float:
    return math.sqrt(integrate(xi * xi, dens.grid))


def _apply(prev: np.ndarray, dens: SampledDensity, endpoint: float | None = None) -> Iterate:
    grid = dens.grid
    g = dens.sqrt_rho * np.asarray(prev, float)
    inner = cumulative_integral(g, grid)
    outer = cumulative_integral(inner, grid)
    if endpoint is None:
        kappa = outer[-1] / (dens.x[-1] - dens.x[0])
    else:
        kappa = _hermite_at(dens.x, outer, inner, endpoint) / (endpoint - dens.x[0])
    u = kappa * _span(dens) - outer
    return Iterate(dens.sqrt_rho * u, kappa - inner, kappa)


def _hermite_at(x: np.ndarray, f: np.ndarray, df: np.ndarray, xp: float) -> float:
    """Cubic Hermite interpolation of samples with known derivatives."""
    i = int(np.clip(np.searchsorted(x, xp) - 1, 0, x.size - 2))
    h = x[i + 1] - x[i]
    t = (xp - x[i]) / h
    h00 = (1 + 2 * t) * (1 - t) ** 2
    h10 = t * (1 - t) ** 2
    h01 = t * t * (3 - 2 * t)
    h11 = t * t * (t - 1)
    return h00 * f[i] + h10 * h * df[i] + h01 * f[i + 1] + h11 * h * df[i + 1]


def theorem1_step(prev: np.ndarray, dens: SampledDensity, normalize: bool = True) -> Iterate:
    """Apply the inverse operator once:
    xi_n(x) = sqrt(rho) int_{-L}^x [kappa - int_{-L}^y sqrt(rho) xi_{n-1}],
    with kappa fixing xi_n(L) = 0. Normalised to unit plain L2 norm."""
    it = _apply(prev, dens)
    if not normalize:
        return it
    nrm = _norm(it.xi, dens)
    if nrm == 0:
        raise ValueError("iterate vanished identically")
    return it.scaled(1.0 / nrm)


def rayleigh_quotient(f: np.ndarray, dens: SampledDensity, slope: np.ndarray | None = None) -> float:
    """int (d(f/sqrt rho)/dx)^2 dx / int f^2 dx for Dirichlet samples f.

    Pass ``slope`` when the derivative of f/sqrt(rho) is known; otherwise it
    is differenced on the grid.
    """
    f = np.asarray(f, float)
    den = integrate(f * f, dens.grid)
    if den == 0:
        raise ValueError("zero-norm function has no Rayleigh quotient")
    if slope is None:
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(f == 0, 0.0, f / dens.sqrt_rho)
        slope = derivative(u, dens.grid)
    return integrate(slope * slope, dens.grid) / den


def physical_mode(xi: np.ndarray, dens: SampledDensity) -> np.ndarray:
    """xi/sqrt(rho), rescaled to unit rho-weighted norm, first lobe positive."""
    with np.errstate(divide="ignore", invalid="ignore"):
        psi = np.where(xi == 0, 0.0, xi / dens.sqrt_rho)
    nrm = math.sqrt(integrate(psi * psi * dens.rho, dens.grid))
    psi = psi / nrm
    lead = psi[np.argmax(np.abs(psi) > 1e-8 * np.abs(psi).max())]
    return psi if lead >= 0 else -psi


def overlap(xi: np.ndarray, dens: SampledDensity, psi: np.ndarray) -> float:
    """Projection int sqrt(rho) xi_bar psi dx of the normalised iterate on a mode."""
    xi = np.asarray(xi, float)
    xi_bar = xi / _norm(xi, dens)
    return integrate(dens.sqrt_rho * xi_bar * psi, dens.grid)


def theorem1_solve(xi0: np.ndarray, dens: SampledDensity, tol: float = 1e-13,
                   max_iter: int = 200) -> tuple[ModeSolution, list[IterationTrace]]:
    """Iterate the inverse operator until the Rayleigh quotient settles.

    Convergence is declared once consecutive quotients differ by less than
    ``tol`` relative. On hitting ``max_iter`` the solution is returned with
    ``converged=False``.
    """
    xi = np.asarray(xi0, float)
    nrm0 = _norm(xi, dens)
    traces = [IterationTrace(0, xi / nrm0, float("nan"), float("nan"), nrm0, float(xi[-1] / nrm0))]
    prev_e = math.inf
    converged = False
    it = None
    for n in range(1, max_iter + 1):
        it = theorem1_step(xi, dens)
        e = rayleigh_quotient(it.xi, dens, it.slope)
        traces.append(IterationTrace(n, it.xi, it.kappa, e, it.norm, float(it.xi[-1])))
        xi = it.xi
        if abs(prev_e - e) <= tol * e:
            converged = True
            break
        prev_e = e
    if not converged:
        log.warning("inverse iteration did not settle in %d steps", max_iter)
    e = traces[-1].energy
    mode = ModeSolution(e, dens.x, physical_mode(xi, dens), "iterate", converged,
                        {"iterations": len(traces) - 1, "kappa": it.kappa})
    return mode, traces


def gegenbauer_trial(n: int, x: np.ndarray, half_length: float = 0.5) -> np.ndarray:
    """Weighted Gegenbauer trial 3 sqrt2 (1-y^2) C^{5/2}_{n+1}(y) / c_n, y = x/L.

    Unit plain L2 norm on (-1/2, 1/2); for other L it is rescaled to stay
    normalised. n >= -1.
    """
    y = np.asarray(x, float) / half_length
    m = n + 1
    lognorm = 0.5 * (gammaln(m + 5) - math.log(n + 3.5) - gammaln(m + 1))
    vals = 3 * math.sqrt(2) * (1 - y * y) * eval_gegenbauer(m, 2.5, y) / math.exp(lognorm)
    return vals / math.sqrt(2 * half_length)


def gegenbauer_trials(count: int, x: np.ndarray, half_length: float = 0.5) -> list[np.ndarray]:
    """Default trial set: orders C_0 ... C_{count-1}."""
    return [gegenbauer_trial(n, x, half_length) for n in range(-1, count - 1)]


def _gram_schmidt(items: list[Iterate], dens: SampledDensity, passes: int = 2) -> list[Iterate]:
    out: list[Iterate] = []
    for j, it in enumerate(items):
        xi, slope = it.xi.copy(), it.slope.copy()
        before = _norm(xi, dens)
        for _ in range(passes):
            for prev in out:
                c = integrate(prev.xi * xi, dens.grid)  # prev has unit norm
                xi -= c * prev.xi
                slope -= c * prev.slope
        after = _norm(xi, dens)
        if after <= 1e-10 * before:
            raise RankLossError(j)
        out.append(Iterate(xi / after, slope / after, it.kappa / after))
    return out


@dataclass
class BlockResult:
    modes: list[ModeSolution]
    history: np.ndarray  # (iterations + 1, count); row 0 holds the trial quotients


def theorem2_block(trials: Sequence[np.ndarray], dens: SampledDensity,
                   iterations: int = 10) -> BlockResult:
    """Block inverse iteration with sequential Gram-Schmidt after each sweep.

    Trials are put in ascending Rayleigh-quotient order after the first sweep
    (raw trials need not satisfy the end conditions); Gram-Schmidt is applied
    twice per vector.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    first = []
    for t in trials:
        t = np.asarray(t, float)
        try:
            first.append(rayleigh_quotient(t, dens) if abs(t[0]) + abs(t[-1]) < 1e-12 * np.abs(t).max() else math.nan)
        except ValueError:
            first.append(math.nan)
    history = [first]
    block = [np.asarray(t, float) for t in trials]
    its: list[Iterate] = []
    for sweep in range(iterations):
        stepped = [theorem1_step(f, dens) for f in block]
        if sweep == 0:
            stepped.sort(key=lambda s: rayleigh_quotient(s.xi, dens, s.slope))
        its = _gram_schmidt(stepped, dens)
        block = [s.xi for s in its]
        history.append([rayleigh_quotient(s.xi, dens, s.slope) for s in its])
    hist = np.array(history, float)
    order = np.argsort(hist[-1])
    modes = [
        ModeSolution(float(hist[-1, j]), dens.x, physical_mode(its[j].xi, dens), "block",
                     True, {"iterations": iterations})
        for j in order
    ]
    return BlockResult(modes, hist[:, order])


def solve_pencil(items: Sequence[Iterate], dens: SampledDensity, what: str = "trial function") -> PencilResult:
    """Rayleigh-Ritz on the span of Dirichlet iterates: A v = lambda B v with
    A_ij = int u_i' u_j' and B_ij = int xi_i xi_j."""
    m = len(items)
    a = np.empty((m, m))
    b = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            a[i, j] = a[j, i] = integrate(items[i].slope * items[j].slope, dens.grid)
            b[i, j] = b[j, i] = integrate(items[i].xi * items[j].xi, dens.grid)
    # rank loss shows up as a vanishing pivot long before dpotrf fails
    d = np.sqrt(np.diag(b))
    bn = b / np.outer(d, d)
    try:
        ch = np.linalg.cholesky(bn)
    except np.linalg.LinAlgError:
        raise RankLossError(m - 1, what) from None
    piv = np.diag(ch) ** 2
    if np.any(piv < 1e-13):
        raise RankLossError(int(np.argmax(piv < 1e-13)), what)
    try:
        dec = eigensolve_generalized(a, b)
    except NotPositiveDefiniteError as exc:
        raise RankLossError(exc.pivot, what) from None
    xis = np.array([it.xi for it in items])
    modes = []
    for k in range(m):
        xi = dec.eigenvectors[:, k] @ xis
        modes.append(ModeSolution(float(dec.eigenvalues[k]), dens.x, physical_mode(xi, dens), "gep"))
    return PencilResult(dec.eigenvalues, modes, m)


def gep_from_trials(trials: Sequence[np.ndarray], dens: SampledDensity) -> PencilResult:
    """One inverse-operator step on every trial, then the generalized pencil."""
    return solve_pencil([theorem1_step(t, dens) for t in trials], dens)


def krylov_gep(xi0: np.ndarray, dens: SampledDensity, depth: int) -> PencilResult:
    """Pencil on the Krylov iterates xi_1 ... xi_depth of one start function.

    ``xi_0`` itself is left out because it need not satisfy the end
    conditions, so depth 1 is just the Rayleigh quotient of xi_1.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    items = []
    xi = np.asarray(xi0, float)
    for _ in range(depth):
        it = theorem1_step(xi, dens)
        items.append(it)
        xi = it.xi
    try:
        res = solve_pencil(items, dens)
    except RankLossError as exc:
        # item i is xi_{i+1}
        raise RankLossError(exc.index + 1, "Krylov depth") from None
    for md in res.modes:
        md.method = "krylov"
    return res


def variational_solve(family: Callable[[float], np.ndarray], dens: SampledDensity,
                      scan: tuple[float, float] = (-20.0, 20.0), n_coarse: int = 41) -> tuple[float, float]:
    """Minimise the Rayleigh quotient of xi_1 over a one-parameter start xi_0(v).

    A coarse scan picks the basin, a bounded Brent search polishes it. When
    v = 0 is admissible and no worse than the optimum, 0 is returned.
    """
    lo, hi = map(float, scan)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError("scan interval must be finite and non-empty")

    def energy(v: float) -> float:
        it = theorem1_step(family(v), dens)
        return rayleigh_quotient(it.xi, dens, it.slope)

    vs = np.linspace(lo, hi, n_coarse)
    es = np.array([energy(v) for v in vs])
    k = int(np.argmin(es))
    a, b = vs[max(k - 1, 0)], vs[min(k + 1, n_coarse - 1)]
    res = minimize_scalar(energy, bounds=(a, b), method="bounded", options={"xatol": 1e-10})
    best_v, best_e = (float(res.x), float(res.fun)) if res.fun <= es[k] else (float(vs[k]), float(es[k]))
    if lo <= 0.0 <= hi:
        e0 = energy(0.0)
        if e0 <= best_e * (1 + 1e-12):
            return 0.0, e0
    return best_v, best_e


def theorem3_step(prev: np.ndarray, dens: SampledDensity, endpoint: float) -> Iterate:
    """One shooting iteration with the inner end condition placed at ``endpoint``:
    kappa = (1/(L+L')) int_{-L}^{L'} dy int_{-L}^y sqrt(rho) eta_{n-1}.

    The result is left unnormalised; it vanishes at -L and (up to
    interpolation error) at ``endpoint``.
    """
    lo, hi = dens.x[0], dens.x[-1]
    if not lo < endpoint <= hi:
        raise ValueError(f"endpoint {endpoint} outside ({lo}, {hi}]")
    if endpoint == hi:
        return _apply(prev, dens)
    return _apply(prev, dens, endpoint)


def default_shooting_start(dens: SampledDensity, endpoint: float) -> np.ndarray:
    return (dens.x - dens.x[0]) * (endpoint - dens.x)


def shooting_residual(dens: SampledDensity, endpoint: float, n_iter: int,
                      eta0: Callable[[SampledDensity, float], np.ndarray] = default_shooting_start,
                      return_iterate: bool = False):
    """eta_n(L) after ``n_iter`` steps at fixed L', rescaled by the L2 norm
    after every step (a positive factor, so roots are unaffected)."""
    eta = eta0(dens, endpoint)
    it = None
    for _ in range(n_iter):
        it = theorem3_step(eta, dens, endpoint)
        nrm = _norm(it.xi, dens)
        it = it.scaled(1.0 / nrm)
        eta = it.xi
    if return_iterate:
        return float(eta[-1]), it
    return float(eta[-1])


def shoot_excited(dens: SampledDensity, n_iter: int = 20, n_scan: int = 400, tol: float = 1e-13,
                  eta0: Callable[[SampledDensity, float], np.ndarray] = default_shooting_start,
                  margin: float | None = None) -> list[ShootingResult]:
    """Modes from the zeros of eta_n(L) as the inner endpoint L' varies.

    L' = L is always a root and gives the fundamental branch. The remaining
    roots are found by scanning (-L, L) and bisecting sign changes. Results
    are ordered by energy.
    """
    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    lo, hi = float(dens.x[0]), float(dens.x[-1])
    if margin is None:
        margin = (hi - lo) / n_scan
    roots = find_roots(lambda lp: shooting_residual(dens, lp, n_iter, eta0),
                       (lo + margin, hi - margin), n_scan, tol)
    out = []
    for lp in [hi] + roots[::-1]:
        res, it = shooting_residual(dens, lp, n_iter, eta0, return_iterate=True)
        e = rayleigh_quotient(it.xi, dens, it.slope)
        out.append(ShootingResult(lp, n_iter, res, e, dens.x, physical_mode(it.xi, dens)))
    out.sort(key=lambda r: r.energy)
    return out
