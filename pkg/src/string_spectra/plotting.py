"""Static figures written next to the report files (Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .report import ModeProfile, SpectrumReport  # noqa: E402


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_spectrum(report: SpectrumReport, path) -> Path:
    """Energies against n; with several methods, a second panel shows
    |E/E_ref - 1| on a log scale."""
    path = Path(path)
    multi = len(report.methods) > 1
    fig, axes = plt.subplots(1, 2 if multi else 1, figsize=(10 if multi else 5.5, 4))
    ax = axes[0] if multi else axes
    n = np.arange(1, report.n_modes + 1)
    for m in report.methods:
        e = np.array([np.nan if v is None else v for v in report.energies[m]])
        ax.plot(n, e, "o-", ms=4, label=m)
    ax.set_xlabel("n")
    ax.set_ylabel("E_n")
    ax.set_title(report.density)
    ax.legend()
    if multi:
        dev = report.deviations()
        ax = axes[1]
        for m in report.methods[1:]:
            d = np.array([np.nan if v is None else abs(v) for v in dev[m]])
            d[d == 0] = np.nan
            ax.semilogy(n, d, "o-", ms=4, label=m)
        ax.set_xlabel("n")
        ax.set_ylabel(f"|E/E[{report.reference}] - 1|")
        ax.legend()
    return _save(fig, path)


def plot_modes(profile: ModeProfile, path) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for n in sorted(profile.psi):
        ax.plot(profile.x, profile.psi[n], lw=1.2, label=f"n={n}")
    ax.axhline(0, color="0.6", lw=0.6)
    ax.set_xlabel("x")
    ax.set_ylabel("psi_n(x)")
    ax.set_title(f"{profile.density} ({profile.method})")
    ax.legend()
    return _save(fig, path)


def plot_overlaps(overlaps: np.ndarray, path) -> Path:
    """|overlap| of iterate j with exact mode k, one curve per k."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5.5, 4))
    j = np.arange(overlaps.shape[0])
    for k in range(overlaps.shape[1]):
        v = np.abs(overlaps[:, k])
        v[v == 0] = np.nan
        ax.semilogy(j, v, "o-", ms=4, label=f"k={k + 1}")
    ax.set_xlabel("iteration j")
    ax.set_ylabel("|overlap|")
    ax.legend()
    return _save(fig, path)
