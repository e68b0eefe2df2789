import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import REF_ITERATE_OVERLAPS, REF_SHOOT_ENERGIES
from string_spectra import __version__
from string_spectra.cli import main
from string_spectra.report import CSV_HEADERS, ModeProfile, SpectrumReport


def run(capsys, *args):
    try:
        code = main(list(args))
    except SystemExit as exc:  # argparse usage errors
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


def _csv_rows(text):
    lines = text.splitlines()
    assert lines[0].startswith(f"# string-spectra {__version__} format=1")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_spectrum_constant_collocate(capsys):
    code, out, _ = run(capsys, "spectrum", "--density", "constant", "--method", "collocate",
                       "--grid-n", "256", "--modes", "5")
    assert code == 0
    rep = json.loads(out)
    e = [row["energies"]["collocate"] for row in rep["modes"]]
    assert e == pytest.approx([(n * np.pi) ** 2 for n in range(1, 6)], rel=1e-10)


def test_spectrum_shoot_parabolic(capsys):
    code, out, _ = run(capsys, "spectrum", "--density", "parabolic:alpha=1", "--method", "shoot",
                       "--iterations", "20", "--modes", "7", "--format", "csv")
    assert code == 0
    rows = _csv_rows(out)
    assert len(rows) == 7
    assert [float(r["energy"]) for r in rows[:5]] == pytest.approx(REF_SHOOT_ENERGIES, rel=1e-6)


def test_spectrum_wkb_borg(capsys):
    code, out, _ = run(capsys, "spectrum", "--density", "borg:alpha=10", "--method", "wkb", "--modes", "3",
                       "--format", "csv")
    assert code == 0
    assert [r["energy"] for r in _csv_rows(out)] == ["9.869604401", "39.4784176", "88.82643961"]


def test_ten_significant_digits(capsys):
    _, out, _ = run(capsys, "spectrum", "--density", "parabolic:alpha=1", "--method", "wkb", "--modes", "3",
                    "--format", "csv")
    for r in _csv_rows(out):
        assert len(r["energy"].replace(".", "").lstrip("0")) <= 10


def test_compare_parabolic_columns(capsys, tmp_path):
    out = tmp_path / "parabolic.csv"
    code, _, _ = run(capsys, "compare", "--density", "parabolic:alpha=1", "--methods", "shoot,collocate,wkb",
                     "--modes", "5", "--format", "csv", "--out", str(out))
    assert code == 0
    rows = _csv_rows(out.read_text())
    assert list(rows[0].keys()) == CSV_HEADERS["compare"]
    by = {(int(r["n"]), r["method"]): r for r in rows}
    for n in range(1, 6):
        assert float(by[n, "shoot"]["deviation"]) == 0
        assert abs(float(by[n, "collocate"]["deviation"])) < 1e-6
    assert float(by[1, "wkb"]["deviation"]) == pytest.approx(9.869604401 / 9.191320572 - 1, rel=1e-6)
    assert (tmp_path / "parabolic.png").stat().st_size > 1000


@pytest.mark.parametrize("alpha", ["1", "10"])
def test_compare_borg_exact(capsys, alpha):
    code, out, _ = run(capsys, "compare", "--density", f"borg:alpha={alpha}", "--methods", "exact,collocate",
                       "--modes", "10")
    assert code == 0
    devs = [row["deviations"]["collocate"] for row in json.loads(out)["modes"]]
    assert all(0 < v < 1e-7 for v in devs)
    assert all(b > a for a, b in zip(devs, devs[1:]))


def test_compare_constant_trivial(capsys):
    code, out, _ = run(capsys, "compare", "--density", "constant", "--methods", "exact,collocate,wkb",
                       "--grid-n", "256", "--modes", "8")
    assert code == 0
    for row in json.loads(out)["modes"]:
        assert all(abs(v) <= 1e-8 for v in row["deviations"].values())


def test_compare_needs_two(capsys):
    code, _, err = run(capsys, "compare", "--density", "constant", "--method", "wkb")
    assert code == 1 and "at least two" in err


def test_exact_only_for_solvable(capsys):
    code, _, err = run(capsys, "spectrum", "--density", "parabolic:alpha=1", "--method", "exact")
    assert code == 1 and "exact" in err


@pytest.mark.parametrize("args", [
    ["spectrum", "--density", "bogus"],
    ["spectrum", "--density", "expr:x"],
    ["spectrum", "--density", "constant", "--grid-n", "7"],
    ["spectrum", "--density", "constant", "--modes", "0"],
    ["spectrum", "--density", "constant", "--methods", "wkb,nope"],
    ["spectrum"],
    ["frobnicate", "--density", "constant"],
    ["modes", "--density", "constant", "--method", "shoot", "--modes", "40"],
])
def test_error_exit_code(capsys, args):
    assert run(capsys, *args)[0] == 1


def test_warning_exit_code(capsys):
    code, out, err = run(capsys, "spectrum", "--density", "parabolic:alpha=1", "--method", "iterate",
                         "--iterations", "3")
    assert code == 2 and "warning" in err
    assert json.loads(out)["metadata"]["warnings"]


def test_pt_kmax_warning_exit(capsys):
    code, _, _ = run(capsys, "spectrum", "--density", "parabolic:alpha=1", "--method", "pt", "--kmax", "10",
                     "--modes", "5")
    assert code == 2


def test_modes_borg_collocate(capsys):
    code, out, _ = run(capsys, "modes", "--density", "borg:alpha=10", "--method", "collocate", "--modes", "1",
                       "--format", "json")
    assert code == 0
    prof = ModeProfile.from_json(out)
    from oracles import borg_exact_mode

    inner = prof.x[1:-1]
    h = inner[1] - inner[0]
    err = h * np.abs(prof.psi[1][1:-1] - borg_exact_mode(10, 1, inner)).sum()
    assert 3.36e-11 < err < 3.36e-9


def test_modes_constant_n2(capsys):
    code, out, _ = run(capsys, "modes", "--density", "constant", "--method", "collocate", "--modes", "2",
                       "--grid-n", "128", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    data = np.loadtxt(io.StringIO("\n".join(lines[1:])), delimiter=",", skiprows=1)
    x, psi2 = data[:, 0], data[:, 2]
    ref = np.sqrt(2) * np.sin(2 * np.pi * (x + 0.5))
    assert min(np.abs(psi2 - ref).max(), np.abs(psi2 + ref).max()) < 1e-10


def test_modes_overlap_table(capsys, tmp_path):
    out = tmp_path / "m.csv"
    code, _, _ = run(capsys, "modes", "--density", "borg:alpha=10", "--method", "iterate", "--overlaps",
                     "--iterations", "5", "--modes", "3", "--format", "csv", "--out", str(out))
    assert code == 0
    rows = _csv_rows((tmp_path / "m.overlaps.csv").read_text())
    k1 = [float(r["overlap"]) for r in rows if r["k"] == "1"]
    assert k1 == pytest.approx(REF_ITERATE_OVERLAPS, abs=1e-6)
    for name in ("m.png", "m.overlaps.png"):
        assert (tmp_path / name).exists()
    assert out.read_text().splitlines()[1] == "x,psi_1"


def test_modes_overlaps_need_exact(capsys):
    assert run(capsys, "modes", "--density", "parabolic:alpha=1", "--method", "iterate", "--overlaps")[0] == 1


@pytest.mark.parametrize("src,alpha,n,tol", [("constant", "10", 10, 1e-7), ("constant", "0", 10, 1e-12),
                                             ("parabolic:alpha=1", "0.5", 8, 1e-6)])
def test_isospectral(capsys, src, alpha, n, tol):
    code, out, _ = run(capsys, "isospectral", "--density", src, "--alpha", alpha, "--modes", str(n))
    assert code == 0
    rep = json.loads(out)
    assert rep["command"] == "isospectral"
    assert all(abs(r["deviations"]["transformed"]) <= tol for r in rep["modes"])


def test_isospectral_bad_alpha(capsys):
    assert run(capsys, "isospectral", "--density", "constant", "--alpha", "-1")[0] == 1


def test_json_roundtrip_cli(capsys, tmp_path):
    out = tmp_path / "r.json"
    run(capsys, "compare", "--density", "parabolic:alpha=1", "--methods", "collocate,pt,wkb", "--grid-n", "200",
        "--out", str(out))
    text = out.read_text()
    rep = SpectrumReport.from_json(text)
    assert rep.to_json() + "\n" == text


_floats = st.floats(allow_nan=False, allow_infinity=False, width=64) | st.none()


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(_floats, _floats), min_size=1, max_size=6))
def test_json_roundtrip_bit_exact(pairs):
    rep = SpectrumReport("compare", "x", ["a", "b"], {"a": [p[0] for p in pairs], "b": [p[1] for p in pairs]},
                         {"t": 0.1})
    back = SpectrumReport.from_json(rep.to_json())
    for m in ("a", "b"):
        for u, v in zip(rep.energies[m], back.energies[m]):
            assert (u is None and v is None) or (math.copysign(1, u) == math.copysign(1, v) and u == v)
    assert back.to_json() == rep.to_json()


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=3, max_size=10))
def test_mode_profile_roundtrip(vals):
    x = np.linspace(-0.5, 0.5, len(vals))
    p = ModeProfile("d", "m", x, {1: np.array(vals)}, {1: 1.5}, np.array([[0.25, 1e-300]]))
    q = ModeProfile.from_json(p.to_json())
    assert np.array_equal(q.x, p.x) and np.array_equal(q.psi[1], p.psi[1]) and np.array_equal(q.overlaps, p.overlaps)


def test_csv_header_fixed_per_command():
    rep = SpectrumReport("spectrum", "d", ["wkb"], {"wkb": [1.0, 2.0]})
    assert rep.to_csv().splitlines()[1] == "n,method,energy"
    rep = SpectrumReport("compare", "d", ["a", "b"], {"a": [1.0], "b": [None]})
    lines = rep.to_csv().splitlines()
    assert lines[1] == "n,method,energy,deviation"
    assert lines[3] == "1,b,,"


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out
