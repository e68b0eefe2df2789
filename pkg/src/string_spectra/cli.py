"""``string-spectra`` command line.

Exit codes: 0 success, 2 a solver reported a warning (non-convergence,
truncation), 1 an error (bad density, bad arguments, method mismatch).
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, exact, iterate
from .density import DensityError, gottlieb_transform, parse_density_spec, quadrature_density
from .report import ModeProfile, SpectrumReport, from_results
from .solvers import METHODS, RunConfig, run_method

log = logging.getLogger("string_spectra")

EXIT_OK, EXIT_ERROR, EXIT_WARN = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="string-spectra", description="Eigenvalues and modes of a fixed-end string with variable density.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--density", required=True, help="constant | borg:alpha=A | parabolic:alpha=A | "
                        "linear:alpha=A | expr:<formula in x> | file:<csv>  (optional ,L=<half length>)")
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--method", choices=METHODS)
        g.add_argument("--methods", help="comma-separated list; the first is the reference")
        sp.add_argument("--grid-n", type=int, default=2000, help="collocation grid size N (even)")
        sp.add_argument("--quad-n", type=int, default=4001, help="quadrature / sampling points")
        sp.add_argument("--modes", type=int, default=5, help="number of modes")
        sp.add_argument("--iterations", type=int, help="iteration count (iterate/block/shoot) or Krylov depth")
        sp.add_argument("--kmax", type=int, default=200, help="perturbation-theory basis size")
        sp.add_argument("--tol", type=float, default=1e-10, help="convergence tolerance")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--out", help="output file; a .png figure is written next to it")
        sp.add_argument("-v", "--verbose", action="store_true")
        return sp

    common(sub.add_parser("spectrum", help="energies from one method"))
    common(sub.add_parser("compare", help="energies from several methods with deviations"))
    sp = common(sub.add_parser("modes", help="sampled mode profiles"))
    sp.add_argument("--overlaps", action="store_true",
                    help="with --method iterate on a constant or Borg density: overlap table of "
                         "iterates j=0..J with the exact modes")
    sp = common(sub.add_parser("isospectral", help="source density against its rational isospectral transform"))
    sp.add_argument("--alpha", type=float, default=10.0, help="transform parameter (> -1)")
    return p


def _config(args) -> RunConfig:
    if args.methods:
        methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    elif args.method:
        methods = (args.method,)
    else:
        methods = ("collocate",)
    return RunConfig(
        density=args.density, methods=methods, grid_n=args.grid_n, quad_n=args.quad_n,
        n_modes=args.modes, iterations=args.iterations, kmax=args.kmax, tol=args.tol,
        fmt=args.format, out=args.out, alpha=getattr(args, "alpha", None),
        overlaps=getattr(args, "overlaps", False),
    )


def _emit(text: str, cfg: RunConfig) -> Path | None:
    if cfg.out is None:
        sys.stdout.write(text)
        return None
    path = Path(cfg.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _write_report(report: SpectrumReport, cfg: RunConfig) -> None:
    text = report.to_json() + "\n" if cfg.fmt == "json" else report.to_csv()
    path = _emit(text, cfg)
    if path is not None:
        from .plotting import plot_spectrum

        plot_spectrum(report, path.with_suffix(".png"))
        sys.stderr.write(report.to_text())


def _metadata(cfg: RunConfig, results, extra=None) -> dict:
    meta = {"config": cfg.echo(), "timings": {r.method: r.seconds for r in results},
            "diagnostics": {r.method: {k: v for k, v in r.diagnostics.items() if k != "traces"} for r in results},
            "warnings": [w for r in results for w in r.warnings]}
    meta.update(extra or {})
    return meta


def cmd_spectrum(cfg: RunConfig) -> int:
    if len(cfg.methods) != 1:
        raise ValueError("spectrum takes a single --method; use compare for several")
    profile = parse_density_spec(cfg.density)
    res = run_method(cfg.methods[0], profile, cfg)
    report = from_results("spectrum", profile.label, [res], _metadata(cfg, [res]))
    _write_report(report, cfg)
    return _finish(report.metadata["warnings"])


def cmd_compare(cfg: RunConfig) -> int:
    if len(cfg.methods) < 2:
        raise ValueError("compare needs at least two methods (--methods a,b)")
    profile = parse_density_spec(cfg.density)
    results = [run_method(m, profile, cfg) for m in cfg.methods]
    report = from_results("compare", profile.label, results, _metadata(cfg, results))
    _write_report(report, cfg)
    return _finish(report.metadata["warnings"])


def _overlap_table(profile, cfg: RunConfig) -> np.ndarray:
    if not exact.has_exact(profile):
        raise exact.NoExactSolution("--overlaps needs a constant or Borg density")
    dens = quadrature_density(profile, cfg.quad_n)
    exact_modes = [exact.exact_mode(profile, k, dens.x) for k in range(1, cfg.n_modes + 1)]
    xi = np.ones_like(dens.x)
    rows = []
    for j in range((cfg.iterations or 5) + 1):
        if j:
            xi = iterate.theorem1_step(xi, dens).xi
        rows.append([iterate.overlap(xi, dens, psi) for psi in exact_modes])
    return np.array(rows)


def cmd_modes(cfg: RunConfig) -> int:
    if len(cfg.methods) != 1:
        raise ValueError("modes takes a single --method")
    method = cfg.methods[0]
    profile = parse_density_spec(cfg.density)
    if cfg.overlaps and method != "iterate":
        raise ValueError("--overlaps is only defined for --method iterate")
    # with --overlaps the iteration count sizes the table, not the mode solve
    solve_cfg = replace(cfg, iterations=None) if cfg.overlaps else cfg
    res = run_method(method, profile, solve_cfg)
    if not res.modes:
        raise ValueError(f"{method} produced no modes")
    wanted = range(1, cfg.n_modes + 1)
    missing = [n for n in wanted if n not in res.modes]
    if method == "iterate":
        missing = []  # iterate documents that it returns the fundamental only
    if missing:
        raise IndexError(f"mode {missing[0]} beyond the range computed by {method}")
    ns = [n for n in wanted if n in res.modes]
    x = res.modes[ns[0]][0]
    # the modes of one method share a grid; guard anyway
    psi = {n: np.interp(x, *res.modes[n]) for n in ns}
    overlaps = _overlap_table(profile, cfg) if cfg.overlaps else None
    prof = ModeProfile(profile.label, method, x, psi, {n: float(res.energies[n - 1]) for n in ns},
                       overlaps, _metadata(cfg, [res]))
    text = prof.to_json() + "\n" if cfg.fmt == "json" else prof.to_csv()
    path = _emit(text, cfg)
    if path is not None:
        from .plotting import plot_modes, plot_overlaps

        plot_modes(prof, path.with_suffix(".png"))
        if overlaps is not None:
            path.with_name(f"{path.stem}.overlaps.csv").write_text(prof.overlaps_csv())
            plot_overlaps(overlaps, path.with_name(f"{path.stem}.overlaps.png"))
    elif overlaps is not None and cfg.fmt == "csv":
        sys.stdout.write(prof.overlaps_csv())
    return _finish(res.warnings)


def cmd_isospectral(cfg: RunConfig) -> int:
    source = parse_density_spec(cfg.density)
    target = gottlieb_transform(source, cfg.alpha)
    method = cfg.methods[0]
    if len(cfg.methods) != 1:
        raise ValueError("isospectral takes a single --method")
    a = run_method(method, source, cfg)
    b = run_method(method, target, cfg)
    a.method, b.method = "source", "transformed"
    report = from_results("isospectral", source.label, [a, b],
                          _metadata(cfg, [a, b], {"transformed": target.label, "solver": method}))
    _write_report(report, cfg)
    return _finish(report.metadata["warnings"])


def _finish(warnings) -> int:
    for w in warnings:
        sys.stderr.write(f"warning: {w}\n")
    return EXIT_WARN if warnings else EXIT_OK


COMMANDS = {"spectrum": cmd_spectrum, "compare": cmd_compare, "modes": cmd_modes, "isospectral": cmd_isospectral}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    try:
        cfg = _config(args)
        code = COMMANDS[args.command](cfg)
    except (DensityError, ValueError, IndexError, ArithmeticError, OSError, RuntimeError) as exc:
        sys.stderr.write(f"string-spectra: error: {exc}\n")
        return EXIT_ERROR
    log.info("done in %.2f s", time.perf_counter() - t0)
    return code


if __name__ == "__main__":
    sys.exit(main())
