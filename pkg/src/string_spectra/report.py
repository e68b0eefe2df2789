"""Spectrum and mode-profile reports: JSON and CSV serialisation."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__

FORMAT_VERSION = 1

CSV_HEADERS = {
    "spectrum": ["n", "method", "energy"],
    "compare": ["n", "method", "energy", "deviation"],
    "isospectral": ["n", "method", "energy", "deviation"],
}


def fmt_energy(e: float | None) -> str:
    """10 significant digits; empty for a missing value."""
    return "" if e is None else f"{e:.10g}"


def _num(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


@dataclass
class SpectrumReport:
    """Per-mode energies for one or more methods.

    Deviations are E/E_ref - 1 against the first method in ``methods``.
    """

    command: str
    density: str
    methods: list[str]
    energies: dict[str, list[float | None]]
    metadata: dict = field(default_factory=dict)

    @property
    def n_modes(self) -> int:
        return max(len(v) for v in self.energies.values())

    @property
    def reference(self) -> str:
        return self.methods[0]

    def deviations(self) -> dict[str, list[float | None]]:
        ref = self.energies[self.reference]
        out = {}
        for m in self.methods:
            col = []
            for e, r in zip(self.energies[m], ref):
                col.append(None if e is None or r is None or r == 0 else _num(e / r - 1.0))
            out[m] = col
        return out

    def rows(self) -> list[dict]:
        dev = self.deviations()
        return [
            {"n": n + 1,
             "energies": {m: self.energies[m][n] for m in self.methods},
             "deviations": {m: dev[m][n] for m in self.methods}}
            for n in range(self.n_modes)
        ]

    # -- JSON ---------------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "format": f"string-spectra/{FORMAT_VERSION}",
            "version": __version__,
            "command": self.command,
            "density": self.density,
            "methods": list(self.methods),
            "reference": self.reference,
            "modes": self.rows(),
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False, default=_json_default)

    @classmethod
    def from_dict(cls, d: dict) -> "SpectrumReport":
        methods = list(d["methods"])
        energies = {m: [row["energies"][m] for row in d["modes"]] for m in methods}
        return cls(d["command"], d["density"], methods, energies, d.get("metadata", {}))

    @classmethod
    def from_json(cls, text: str) -> "SpectrumReport":
        return cls.from_dict(json.loads(text))

    # -- CSV ----------------------------------------------------------------
    def to_csv(self) -> str:
        header = CSV_HEADERS[self.command]
        buf = io.StringIO()
        buf.write(f"# string-spectra {__version__} format={FORMAT_VERSION} command={self.command} "
                  f"density={self.density} reference={self.reference}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        dev = self.deviations()
        for n in range(self.n_modes):
            for m in self.methods:
                row = [n + 1, m, fmt_energy(self.energies[m][n])]
                if "deviation" in header:
                    d = dev[m][n]
                    row.append("" if d is None else f"{d:.10g}")
                w.writerow(row)
        return buf.getvalue()

    def to_text(self) -> str:
        """Aligned table for the terminal."""
        dev = self.deviations()
        cols = ["n"] + [f"E[{m}]" for m in self.methods]
        if len(self.methods) > 1:
            cols += [f"dev[{m}]" for m in self.methods[1:]]
        lines = ["  ".join(f"{c:>18}" for c in cols)]
        for n in range(self.n_modes):
            cells = [str(n + 1)] + [fmt_energy(self.energies[m][n]) or "-" for m in self.methods]
            if len(self.methods) > 1:
                cells += ["-" if dev[m][n] is None else f"{dev[m][n]:.3e}" for m in self.methods[1:]]
            lines.append("  ".join(f"{c:>18}" for c in cells))
        return "\n".join(lines) + "\n"


def from_results(command: str, density: str, results, metadata: dict | None = None) -> SpectrumReport:
    """Build a report from :class:`solvers.MethodResult` objects."""
    methods = [r.method for r in results]
    if len(set(methods)) != len(methods):
        raise ValueError("each method may be listed once")
    energies = {r.method: [_num(e) for e in r.energies] for r in results}
    n = max(len(v) for v in energies.values())
    for v in energies.values():
        v.extend([None] * (n - len(v)))
    return SpectrumReport(command, density, methods, energies, metadata or {})


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return [_num(v) for v in o.ravel()]
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


@dataclass
class ModeProfile:
    """Sampled modes on a common x grid, plus an optional overlap table
    (rows: iterations j, columns: exact modes k)."""

    density: str
    method: str
    x: np.ndarray
    psi: dict[int, np.ndarray]
    energies: dict[int, float]
    overlaps: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "format": f"string-spectra/{FORMAT_VERSION}",
            "version": __version__,
            "command": "modes",
            "density": self.density,
            "method": self.method,
            "x": [float(v) for v in self.x],
            "modes": {str(n): [float(v) for v in p] for n, p in self.psi.items()},
            "energies": {str(n): _num(e) for n, e in self.energies.items()},
            "metadata": self.metadata,
        }
        if self.overlaps is not None:
            d["overlaps"] = [[float(v) for v in row] for row in self.overlaps]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False, default=_json_default)

    @classmethod
    def from_json(cls, text: str) -> "ModeProfile":
        d = json.loads(text)
        ov = d.get("overlaps")
        return cls(d["density"], d["method"], np.array(d["x"]),
                   {int(n): np.array(p) for n, p in d["modes"].items()},
                   {int(n): e for n, e in d["energies"].items()},
                   None if ov is None else np.array(ov), d.get("metadata", {}))

    def to_csv(self) -> str:
        buf = io.StringIO()
        ns = sorted(self.psi)
        buf.write(f"# string-spectra {__version__} format={FORMAT_VERSION} command=modes "
                  f"density={self.density} method={self.method}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x"] + [f"psi_{n}" for n in ns])
        for i, xv in enumerate(self.x):
            w.writerow([repr(float(xv))] + [repr(float(self.psi[n][i])) for n in ns])
        return buf.getvalue()

    def overlaps_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# string-spectra {__version__} format={FORMAT_VERSION} command=modes-overlaps "
                  f"density={self.density}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "k", "overlap"])
        for j, row in enumerate(self.overlaps):
            for k, v in enumerate(row):
                w.writerow([j, k + 1, f"{v:.10g}"])
        return buf.getvalue()
