import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import REF_WKB_ENERGIES, borg_exact_mode
from string_spectra import collocation as co
from string_spectra import density as d
from string_spectra import wkb


def test_energy_examples():
    assert [wkb.wkb_energy(n, d.constant()) for n in (1, 2, 3)] == pytest.approx([np.pi ** 2, 4 * np.pi ** 2, 9 * np.pi ** 2], rel=1e-15)
    got = [f"{wkb.wkb_energy(n, d.parabolic(1)):.10g}" for n in range(1, 6)]
    assert got == [f"{v:.10g}" for v in REF_WKB_ENERGIES]
    for a in (1, 10, 1e3):
        assert wkb.wkb_energy(4, d.borg(a)) == pytest.approx(16 * np.pi ** 2, rel=1e-14)
    with pytest.raises(ValueError):
        wkb.wkb_energy(0, d.constant())


def test_wavefunction_constant():
    x = np.linspace(-0.5, 0.5, 41)
    assert np.allclose(wkb.wkb_wavefunction(2, d.constant(), x), np.sqrt(2) * np.sin(2 * np.pi * (x + 0.5)), atol=1e-14)


def test_wavefunction_borg_exact():
    x = np.linspace(-0.5, 0.5, 50)
    w = wkb.wkb_wavefunction(1, d.borg(10), x)
    e = borg_exact_mode(10, 1, x)
    assert np.abs(w / np.linalg.norm(w) - e / np.linalg.norm(e)).max() < 1e-9


@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_nodes(n):
    x = np.linspace(-0.5, 0.5, 4001)[1:-1]
    w = wkb.wkb_wavefunction(n, d.parabolic(1.5), x)
    assert np.sum(np.diff(np.sign(w)) != 0) == n - 1


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["parabolic:alpha=1", "borg:alpha=4", "expr:2+sin(3*x)", "linear:alpha=-1.5"]),
       st.integers(1, 12))
def test_dirichlet_ends(spec, n):
    w = wkb.wkb_wavefunction(n, d.parse_density_spec(spec), np.array([-0.5, 0.5]))
    assert np.abs(w).max() <= 1e-12


def test_phase_integral():
    for spec in ("parabolic:alpha=1", "expr:2+sin(3*x)", "borg:alpha=7"):
        prof = d.parse_density_spec(spec)
        ph = wkb.PhaseIntegral(prof)
        assert ph(-0.5) == pytest.approx(0, abs=1e-15)
        assert ph.total == pytest.approx(2 * 0.5 * prof.moments.mean_sqrt, abs=1e-10)
        x = np.linspace(-0.5, 0.5, 200)
        assert np.all(np.diff(ph(x)) > 0)
    with pytest.raises(ValueError):
        wkb.PhaseIntegral(d.constant())(0.7)


def test_asymptotic_agreement(parabolic_spectrum):
    prof = d.parabolic(1)
    rel = [abs(parabolic_spectrum.energies[n - 1] / wkb.wkb_energy(n, prof) - 1) for n in range(1, 21)]
    assert rel[0] == pytest.approx(0.069, abs=0.001)
    assert np.all(np.diff(rel) < 0)
