"""Uniform front end over the individual methods, used by the CLI."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import collocation, exact, iterate, perturbation, wkb
from .density import DensityProfile, quadrature_density

METHODS = ("collocate", "iterate", "block", "krylov", "shoot", "pt", "wkb", "exact")


@dataclass
class RunConfig:
    density: str
    methods: tuple[str, ...] = ("collocate",)
    grid_n: int = 2000
    quad_n: int = 4001
    n_modes: int = 5
    iterations: int | None = None
    kmax: int = 200
    tol: float = 1e-10
    fmt: str = "json"
    out: str | None = None
    alpha: float | None = None
    overlaps: bool = False

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("--modes must be >= 1")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown method {bad[0]!r}; choose from {', '.join(METHODS)}")
        if not self.methods:
            raise ValueError("no method given")
        if self.grid_n % 2 or self.grid_n < 8:
            raise ValueError("--grid-n must be even and >= 8")
        if self.quad_n < 17:
            raise ValueError("--quad-n must be >= 17")
        if self.iterations is not None and self.iterations < 1:
            raise ValueError("--iterations must be >= 1")
        if self.fmt not in ("json", "csv"):
            raise ValueError("--format must be json or csv")

    def echo(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


@dataclass
class MethodResult:
    """Energies for modes 1..len(energies); NaN marks a mode the method did
    not produce. ``modes`` maps n to (x, psi)."""

    method: str
    energies: np.ndarray
    modes: dict[int, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    seconds: float = 0.0


def _padded(values, n_modes: int) -> np.ndarray:
    out = np.full(n_modes, np.nan)
    vals = np.asarray(values, float)[:n_modes]
    out[: len(vals)] = vals
    return out


def _with_ends(x, psi, L):
    return np.concatenate([[-L], x, [L]]), np.concatenate([[0.0], psi, [0.0]])


def _collocate(profile, cfg):
    spec = collocation.solve_spectrum(profile, cfg.grid_n, min(cfg.n_modes, cfg.grid_n - 1))
    L = profile.half_length
    modes = {n + 1: _with_ends(spec.x, spec.modes[n], L) for n in range(len(spec.energies))}
    res = MethodResult("collocate", _padded(spec.energies, cfg.n_modes), modes,
                       diagnostics={"grid_n": cfg.grid_n})
    if cfg.n_modes > cfg.grid_n // 4:
        res.warnings.append(f"modes above N/4 = {cfg.grid_n // 4} are not resolved by the grid")
    return res


def _iterate(profile, cfg):
    dens = quadrature_density(profile, cfg.quad_n)
    max_iter = cfg.iterations or 200
    sol, traces = iterate.theorem1_solve(np.ones_like(dens.x), dens, tol=cfg.tol, max_iter=max_iter)
    res = MethodResult("iterate", _padded([sol.energy], cfg.n_modes), {1: (sol.x, sol.psi)},
                       diagnostics={"iterations": sol.diagnostics["iterations"], "quad_n": cfg.quad_n})
    res.diagnostics["traces"] = traces
    if not sol.converged:
        res.warnings.append(f"iterate: relative change above {cfg.tol:g} after {max_iter} iterations")
    if cfg.n_modes > 1:
        res.diagnostics["note"] = "only the fundamental mode is produced"
    return res


def _block(profile, cfg):
    dens = quadrature_density(profile, cfg.quad_n)
    trials = iterate.gegenbauer_trials(cfg.n_modes, dens.x, profile.half_length)
    out = iterate.theorem2_block(trials, dens, cfg.iterations or 10)
    modes = {j + 1: (m.x, m.psi) for j, m in enumerate(out.modes)}
    res = MethodResult("block", _padded([m.energy for m in out.modes], cfg.n_modes), modes,
                       diagnostics={"iterations": cfg.iterations or 10, "quad_n": cfg.quad_n})
    last = out.history[-1]
    prev = out.history[-2] if out.history.shape[0] > 2 else np.full_like(last, np.inf)
    if np.any(np.abs(last - prev) > cfg.tol * np.abs(last) * 1e4):
        res.warnings.append("block: Rayleigh quotients still moving in the last sweep")
    return res


def _krylov(profile, cfg):
    dens = quadrature_density(profile, cfg.quad_n)
    depth = cfg.iterations or max(cfg.n_modes, 4)
    if depth < cfg.n_modes:
        raise ValueError(f"Krylov depth {depth} gives fewer than {cfg.n_modes} modes")
    out = iterate.krylov_gep(np.ones_like(dens.x), dens, depth)
    modes = {j + 1: (m.x, m.psi) for j, m in enumerate(out.modes)}
    return MethodResult("krylov", _padded(out.energies, cfg.n_modes), modes,
                        diagnostics={"depth": depth, "quad_n": cfg.quad_n})


def _shoot(profile, cfg):
    dens = quadrature_density(profile, cfg.quad_n)
    n_iter = cfg.iterations or 20
    out = iterate.shoot_excited(dens, n_iter)
    modes = {j + 1: (r.x, r.psi) for j, r in enumerate(out[: cfg.n_modes])}
    res = MethodResult("shoot", _padded([r.energy for r in out], cfg.n_modes), modes,
                       diagnostics={"iterations": n_iter, "quad_n": cfg.quad_n,
                                    "endpoints": [r.endpoint for r in out[: cfg.n_modes]],
                                    "boundary_residuals": [r.boundary_residual for r in out[: cfg.n_modes]]})
    if len(out) < cfg.n_modes:
        res.warnings.append(f"shoot: only {len(out)} roots found")
    return res


def _pt(profile, cfg):
    kmax = max(cfg.kmax, 2 * cfg.n_modes)
    basis = perturbation.PTBasis(profile.half_length, kmax)
    sig = perturbation.sigma_matrix(profile, kmax)
    reps = [perturbation.pt_energy(n, 3, sig, basis, profile.rho0) for n in range(1, cfg.n_modes + 1)]
    x = np.linspace(-profile.half_length, profile.half_length, cfg.quad_n)
    rho = profile(x)
    modes = {}
    for n in range(1, cfg.n_modes + 1):
        # symmetrized-operator mode -> physical mode, then rho-normalised
        psi = perturbation.pt_wavefunction_first_order(n, sig, basis, x) / np.sqrt(rho)
        psi /= math.sqrt(np.trapezoid(psi * psi * rho, x))
        modes[n] = (x, psi)
    res = MethodResult("pt", np.array([r.energy for r in reps]), modes,
                       diagnostics={"kmax": kmax, "tails": [r.tail for r in reps],
                                    "resummed": [perturbation.resummed_energy(n, profile)
                                                 for n in range(1, cfg.n_modes + 1)]})
    for r in reps:
        res.warnings += [f"pt mode {r.n}: {w}" for w in r.warnings]
    return res


def _wkb(profile, cfg):
    x = np.linspace(-profile.half_length, profile.half_length, cfg.quad_n)
    phase = wkb.PhaseIntegral(profile)
    e = [wkb.wkb_energy(n, profile) for n in range(1, cfg.n_modes + 1)]
    modes = {n: (x, wkb.wkb_wavefunction(n, profile, x, phase)) for n in range(1, cfg.n_modes + 1)}
    return MethodResult("wkb", np.array(e), modes)


def _exact(profile, cfg):
    if not exact.has_exact(profile):
        raise exact.NoExactSolution(f"'exact' is only available for constant and Borg densities, not {profile.label}")
    x = np.linspace(-profile.half_length, profile.half_length, cfg.quad_n)
    e = [exact.exact_energy(profile, n) for n in range(1, cfg.n_modes + 1)]
    modes = {n: (x, exact.exact_mode(profile, n, x)) for n in range(1, cfg.n_modes + 1)}
    return MethodResult("exact", np.array(e), modes)


_DISPATCH = {
    "collocate": _collocate, "iterate": _iterate, "block": _block, "krylov": _krylov,
    "shoot": _shoot, "pt": _pt, "wkb": _wkb, "exact": _exact,
}


def run_method(method: str, profile: DensityProfile, cfg: RunConfig) -> MethodResult:
    if method not in _DISPATCH:
        raise ValueError(f"unknown method {method!r}")
    t0 = time.perf_counter()
    res = _DISPATCH[method](profile, cfg)
    res.seconds = time.perf_counter() - t0
    return res
