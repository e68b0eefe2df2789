"""Density profiles of the string, their moments and the isospectral transform."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np
from scipy import integrate as _spi
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from . import exprparse
from .numerics import Grid, cumulative_integral

Fn = Callable[[np.ndarray], np.ndarray]

POSITIVITY_SAMPLES = 4096
EXPRESSION_SAMPLES = 1024


class DensityError(ValueError):
    pass


class PositivityError(DensityError):
    def __init__(self, x: float, value: float):
        super().__init__(f"density is not positive at x={x:.6g} (rho={value:.6g})")
        self.x = x
        self.value = value


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class DensityMoments:
    rho0: float
    mean_sqrt: float
    mean_sigma: float
    mean_sigma_sq: float


@dataclass(frozen=True, eq=False)
class DensityProfile:
    """A positive density on (-L, L).

    Instances are immutable; use the module-level constructors (``constant``,
    ``borg``, ``parabolic``, ``linear``, ``parse_density_expr``,
    ``tabulated``) rather than building one by hand. Optional closed forms
    (phase integral, moments) and a graded quadrature map are attached by
    the constructors that know them.
    """

    family: str
    params: Mapping[str, float]
    half_length: float
    rho_fn: Fn = field(repr=False)
    label: str = ""
    phase_fn: Fn | None = field(default=None, repr=False)
    closed_moments: tuple[float, float, float] | None = field(default=None, repr=False)
    grid_map: tuple[Fn, Fn] | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.half_length > 0:
            raise DensityError("half_length must be positive")
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))
        if not self.label:
            object.__setattr__(self, "label", _default_label(self.family, self.params))

    def __call__(self, x):
        return eval_density(self, x)

    def sqrt(self, x):
        return np.sqrt(eval_density(self, x))

    @cached_property
    def moments(self) -> DensityMoments:
        return moments(self)

    @property
    def rho0(self) -> float:
        return self.moments.rho0

    def phase(self, x) -> np.ndarray:
        """Cumulative integral of sqrt(rho) from -L to x."""
        if self.phase_fn is not None:
            return self.phase_fn(np.asarray(x, float))
        return self._phase_spline(np.asarray(x, float))

    @cached_property
    def _phase_spline(self):
        grid = self.quadrature_grid(8192)
        sq = np.sqrt(self.rho_fn(grid.x))
        return CubicHermiteSpline(grid.x, cumulative_integral(sq, grid), sq)

    def quadrature_grid(self, n_points: int) -> Grid:
        """Quadrature grid adapted to the profile (graded where it knows how)."""
        if self.grid_map is None:
            return Grid.uniform(n_points, self.half_length)
        return Grid.mapped(n_points, *self.grid_map)


def _default_label(family: str, params: Mapping[str, float]) -> str:
    if not params:
        return family
    return family + ":" + ",".join(f"{k}={v:g}" for k, v in params.items())


def _open_samples(L: float, n: int) -> np.ndarray:
    return -L + (np.arange(n) + 0.5) * (2.0 * L / n)


def _check_positive(rho_fn: Fn, L: float, n: int) -> None:
    xs = _open_samples(L, n)
    with np.errstate(all="ignore"):
        vals = np.asarray(rho_fn(xs), float)
    bad = ~(np.isfinite(vals) & (vals > 0))
    if bad.any():
        i = int(np.argmax(bad))
        raise PositivityError(float(xs[i]), float(vals[i]))


def eval_density(profile: DensityProfile, x):
    """rho(x) for x in [-L, L]; scalars in, scalars out."""
    xa = np.asarray(x, float)
    L = profile.half_length
    if np.any(np.abs(xa) > L * (1 + 1e-12)):
        raise DensityError(f"x outside [-{L:g}, {L:g}]")
    out = np.asarray(profile.rho_fn(xa), float)
    return float(out) if out.ndim == 0 else out


def _borg_map(alpha: float, L: float) -> tuple[Fn, Fn]:
    # 1 + alpha*t = (1+alpha)^s, t = (x+L)/2L
    c = math.log1p(alpha)

    def x_of_s(s):
        return -L + 2.0 * L * np.expm1(c * s) / alpha

    def dx_ds(s):
        return 2.0 * L * c * np.exp(c * s) / alpha

    return x_of_s, dx_ds


def constant(value: float = 1.0, half_length: float = 0.5) -> DensityProfile:
    if not value > 0:
        raise PositivityError(0.0, value)
    L = half_length
    return DensityProfile(
        "constant",
        {"value": value} if value != 1.0 else {},
        L,
        lambda x: np.full_like(np.asarray(x, float), value),
        phase_fn=lambda x: math.sqrt(value) * (x + L),
        closed_moments=(value, math.sqrt(value), value * value),
    )


def borg(alpha: float, half_length: float = 0.5) -> DensityProfile:
    """(1+a)^2 / (1 + a t)^4 with t = (x+L)/2L, isospectral to the unit string."""
    if not alpha > -1:
        raise DensityError("Borg density requires alpha > -1")
    L = half_length
    a = float(alpha)

    def rho(x):
        t = (np.asarray(x, float) + L) / (2 * L)
        return (1 + a) ** 2 / (1 + a * t) ** 4

    def phase(x):
        t = (x + L) / (2 * L)
        return 2 * L * (1 + a) * t / (1 + a * t)

    if a == 0:
        rho0, rho_sq = 1.0, 1.0
        gmap = None
    else:
        rho0 = (1 + a) ** 2 * -math.expm1(-3 * math.log1p(a)) / (3 * a)
        rho_sq = (1 + a) ** 4 * -math.expm1(-7 * math.log1p(a)) / (7 * a)
        gmap = _borg_map(a, L)
    return DensityProfile("borg", {"alpha": a}, L, rho, phase_fn=phase,
                          closed_moments=(rho0, 1.0, rho_sq), grid_map=gmap)


def parabolic(alpha: float, half_length: float = 0.5) -> DensityProfile:
    """(1 + a x)^2; positive on the open interval while |a| L <= 1."""
    L = half_length
    a = float(alpha)
    if abs(a) * L > 1:
        raise DensityError(f"parabolic density needs |alpha| <= {1 / L:g}")
    return DensityProfile(
        "parabolic", {"alpha": a}, L,
        lambda x: (1 + a * np.asarray(x, float)) ** 2,
        phase_fn=lambda x: (x + L) + 0.5 * a * (x * x - L * L),
        closed_moments=(1 + a * a * L * L / 3, 1.0,
                        1 + 2 * a * a * L * L + a ** 4 * L ** 4 / 5),
    )


def linear(alpha: float, half_length: float = 0.5) -> DensityProfile:
    """1 + a x; needs |a| L < 1."""
    L = half_length
    a = float(alpha)
    if abs(a) * L >= 1:
        raise DensityError(f"linear density needs |alpha| < {1 / L:g}")
    if a == 0:
        prof = constant(1.0, L)
        return DensityProfile("linear", {"alpha": 0.0}, L, prof.rho_fn,
                              phase_fn=prof.phase_fn, closed_moments=prof.closed_moments)

    def phase(x):
        return 2 / (3 * a) * ((1 + a * x) ** 1.5 - (1 - a * L) ** 1.5)

    mean_sqrt = float(phase(L)) / (2 * L)
    return DensityProfile(
        "linear", {"alpha": a}, L,
        lambda x: 1 + a * np.asarray(x, float),
        phase_fn=phase,
        closed_moments=(1.0, mean_sqrt, 1 + a * a * L * L / 3),
    )


def parse_density_expr(text: str, half_length: float = 0.5) -> DensityProfile:
    """Density given by an arithmetic expression in x."""
    fn = exprparse.parse(text)
    _check_positive(fn, half_length, EXPRESSION_SAMPLES)
    return DensityProfile("expression", {}, half_length, fn, label=f"expr:{text}")


def tabulated(x, rho, label: str = "tabulated") -> DensityProfile:
    """Monotone-cubic interpolant of samples on a symmetric interval."""
    x = np.asarray(x, float)
    rho = np.asarray(rho, float)
    if x.ndim != 1 or x.shape != rho.shape or x.size < 4:
        raise DensityError("need at least 4 (x, rho) samples")
    order = np.argsort(x)
    x, rho = x[order], rho[order]
    if np.any(np.diff(x) <= 0):
        raise DensityError("tabulated x values must be distinct")
    L = 0.5 * (x[-1] - x[0])
    if abs(x[0] + x[-1]) > 1e-9 * L:
        raise DensityError("tabulated density must span a symmetric interval (-L, L)")
    if np.any(rho <= 0):
        i = int(np.argmax(rho <= 0))
        raise PositivityError(float(x[i]), float(rho[i]))
    interp = PchipInterpolator(x, rho, extrapolate=True)
    prof = DensityProfile("tabulated", {}, L, lambda t: interp(np.asarray(t, float)), label=label)
    _check_positive(prof.rho_fn, L, POSITIVITY_SAMPLES)
    return prof


def read_density_csv(path) -> DensityProfile:
    xs, rs = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                xs.append(float(row[0]))
                rs.append(float(row[1]))
            except (ValueError, IndexError):
                if xs:
                    raise DensityError(f"bad row in {path}: {row!r}") from None
                continue  # header
    return tabulated(xs, rs, label=f"file:{path}")


def _quad(f: Fn, L: float, what: str, limit: int) -> float:
    val, err = _spi.quad(lambda t: float(f(np.asarray(t))), -L, L,
                         epsabs=1e-13, epsrel=1e-13, limit=limit)
    if not np.isfinite(val) or err > 1e-9 * max(1.0, abs(val)):
        raise QuadratureError(f"quadrature for {what} did not converge (error estimate {err:.2e})")
    return val


def moments(profile: DensityProfile, quad_points: int = 200) -> DensityMoments:
    """Mean density, mean sqrt-density and the first two moments of sigma.

    Closed forms are used for the built-in families; everything else goes
    through adaptive quadrature with at most ``quad_points`` subintervals.
    """
    if quad_points < 16:
        raise ValueError("quad_points must be at least 16")
    L = profile.half_length
    two_l = 2.0 * L
    if profile.closed_moments is not None:
        rho0, mean_sqrt, mean_rho_sq = profile.closed_moments
        return DensityMoments(rho0, mean_sqrt, 0.0, mean_rho_sq / rho0 ** 2 - 1.0)
    f = profile.rho_fn
    rho0 = _quad(f, L, "rho0", quad_points) / two_l
    if profile.phase_fn is not None:
        mean_sqrt = float(profile.phase_fn(np.asarray(L))) / two_l
    else:
        mean_sqrt = _quad(lambda t: np.sqrt(f(t)), L, "mean sqrt", quad_points) / two_l
    mean_sigma = _quad(lambda t: f(t) / rho0 - 1.0, L, "mean sigma", quad_points) / two_l
    mean_sigma_sq = _quad(lambda t: (f(t) / rho0 - 1.0) ** 2, L, "mean sigma^2", quad_points) / two_l
    return DensityMoments(rho0, mean_sqrt, mean_sigma, mean_sigma_sq)


def sigma(profile: DensityProfile, x):
    """Relative deviation rho(x)/rho0 - 1 from the mean density."""
    return eval_density(profile, x) / profile.rho0 - 1.0


def gottlieb_transform(source: DensityProfile, alpha: float) -> DensityProfile:
    """Isospectral image of ``source`` under the rational change of variable.

    With t = (x+L)/2L the map is t -> (1+a) t / (1 + a t) and the new density
    is (d xi/dx)^2 rho_source(xi(x)). The unit density maps to the Borg
    density with the same alpha.
    """
    a = float(alpha)
    if not a > -1:
        raise DensityError("transform parameter must satisfy alpha > -1")
    L = source.half_length
    if a == 0:
        return source
    src_rho = source.rho_fn

    def xi(x):
        t = (np.asarray(x, float) + L) / (2 * L)
        return -L + 2 * L * (1 + a) * t / (1 + a * t)

    def rho(x):
        t = (np.asarray(x, float) + L) / (2 * L)
        dxi = (1 + a) / (1 + a * t) ** 2
        return dxi * dxi * src_rho(np.clip(xi(x), -L, L))

    def phase(x):
        return source.phase(np.clip(xi(x), -L, L))

    prof = DensityProfile(
        "expression", {"alpha": a}, L, rho,
        label=f"gottlieb({source.label},alpha={a:g})",
        phase_fn=phase,
        grid_map=_borg_map(a, L) if source.grid_map is None else None,
    )
    _check_positive(rho, L, POSITIVITY_SAMPLES)
    return prof


def scaled_sigma(profile: DensityProfile, eta: float) -> DensityProfile:
    """rho0 (1 + eta sigma): the same mean density with the deviation scaled."""
    rho0 = profile.rho0
    f = profile.rho_fn
    prof = DensityProfile(
        "expression", {"eta": float(eta)}, profile.half_length,
        lambda x: rho0 + eta * (f(x) - rho0),
        label=f"scaled({profile.label},eta={eta:g})",
        grid_map=profile.grid_map,
    )
    _check_positive(prof.rho_fn, profile.half_length, POSITIVITY_SAMPLES)
    return prof


@dataclass(frozen=True)
class SampledDensity:
    """Density values (and square roots) at a set of nodes."""

    x: np.ndarray
    rho: np.ndarray
    sqrt_rho: np.ndarray
    grid: Grid | None = None
    profile: DensityProfile | None = None

    def __post_init__(self):
        if np.any(~(self.rho > 0)) and self.grid is None:
            raise DensityError("sampled density must be strictly positive")


def sample_density(profile: DensityProfile, where) -> SampledDensity:
    """Sample on a quadrature ``Grid`` or on an array of nodes."""
    if isinstance(where, Grid):
        x = where.x
        rho = np.asarray(profile.rho_fn(x), float)
        # endpoint zeros are tolerated on quadrature grids (|alpha| L = 1 parabola)
        if np.any(rho[1:-1] <= 0) or np.any(rho < 0):
            i = int(np.argmax(rho <= 0))
            raise PositivityError(float(x[i]), float(rho[i]))
        return SampledDensity(x, rho, np.sqrt(rho), where, profile)
    x = np.asarray(where, float)
    rho = np.asarray(eval_density(profile, x), float)
    return SampledDensity(x, rho, np.sqrt(rho), None, profile)


def quadrature_density(profile: DensityProfile, n_points: int = 4001) -> SampledDensity:
    return sample_density(profile, profile.quadrature_grid(n_points))


def parse_density_spec(spec: str) -> DensityProfile:
    """Parse the CLI density mini-language.

    ``constant``, ``borg:alpha=10``, ``parabolic:alpha=1``,
    ``linear:alpha=0.5``, ``expr:(1+0.5*x)^2``, ``file:path.csv``. Built-in
    families also take ``L=<half-length>``.
    """
    spec = spec.strip()
    head, _, rest = spec.partition(":")
    head = head.strip().lower()
    if head == "expr":
        if not rest.strip():
            raise DensityError("expr: needs an expression")
        return parse_density_expr(rest)
    if head == "file":
        return read_density_csv(rest.strip())
    kw: dict[str, float] = {}
    if rest.strip():
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise DensityError(f"bad parameter {item!r} in density spec {spec!r}")
            try:
                kw[key.strip()] = float(val)
            except ValueError:
                raise DensityError(f"parameter {key.strip()!r} is not a number") from None
    L = kw.pop("L", 0.5)
    builders = {
        "constant": (constant, ("value",)),
        "borg": (borg, ("alpha",)),
        "parabolic": (parabolic, ("alpha",)),
        "linear": (linear, ("alpha",)),
    }
    if head not in builders:
        raise DensityError(f"unknown density family {head!r}")
    fn, allowed = builders[head]
    unknown = set(kw) - set(allowed)
    if unknown:
        raise DensityError(f"unknown parameter(s) {sorted(unknown)} for {head}")
    if head != "constant" and "alpha" not in kw:
        raise DensityError(f"{head} density needs alpha=<value>")
    return fn(**kw, half_length=L)
