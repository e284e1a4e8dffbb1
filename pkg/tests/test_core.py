import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sci

from cavity_eit.core import (
    MAX_SHELLS,
    CrystalGeometry,
    ModeProfile,
    SystemRates,
    analytic_optimal_efficiency,
    build_shell_grid,
    cooperativity,
    default_n_shells,
    effective_atom_number,
    effective_atom_number_exact,
    mode_amplitude,
)

W = 37e-6
RHO = 6.1e14
L = 3e-3


def geom(R, rho=RHO, length=L):
    return CrystalGeometry(rho=rho, length=length, radius=R)


def test_rates_from_mhz():
    r = SystemRates.from_mhz(0.37, 1.5, 11.3)
    assert r.g == pytest.approx(2 * math.pi * 0.37e6)
    assert r.kappa == pytest.approx(2 * math.pi * 1.5e6)
    assert r.gamma0 == 0.0


@pytest.mark.parametrize("bad", [-1.0, math.nan, math.inf])
def test_rates_reject_bad_values(bad):
    with pytest.raises(ValueError):
        SystemRates(bad, 1.0, 1.0)


def test_geometry_validation():
    with pytest.raises(ValueError):
        geom(-1e-6)
    with pytest.raises(ValueError):
        CrystalGeometry(rho=0.0, length=L, radius=1e-6)
    assert geom(0.0).total_ions == 0.0


def test_mode_values():
    assert mode_amplitude(ModeProfile.tem00(W), 0.0) == 1.0
    assert mode_amplitude(ModeProfile.tem00(W), W) == pytest.approx(math.exp(-1))
    assert mode_amplitude(ModeProfile.lg01(W), 0.0) == 0.0
    assert mode_amplitude(ModeProfile.lg01(W), W) == pytest.approx(math.sqrt(2) * math.exp(-1))
    np.testing.assert_array_equal(mode_amplitude(ModeProfile.uniform(), np.array([0.0, 1.0])), 1.0)


def test_mode_rejects_negative_radius():
    with pytest.raises(ValueError):
        mode_amplitude(ModeProfile.tem00(W), -1e-9)


def test_mode_needs_finite_waist():
    with pytest.raises(ValueError):
        ModeProfile.tem00(math.inf)


@pytest.mark.parametrize("probe", [ModeProfile.tem00(W), ModeProfile.lg01(W)])
def test_modes_have_equal_power(probe):
    # both modes carry the same transverse power, int Psi^2 2 pi r dr = pi w^2 / 2
    power, _ = sci.quad(lambda r: probe(r) ** 2 * 2 * math.pi * r, 0, 20 * W)
    assert power == pytest.approx(math.pi * W**2 / 2, rel=1e-10)


def test_shell_grid_layout():
    g = build_shell_grid(geom(100e-6), 10)
    assert g.thickness == pytest.approx(10e-6)
    np.testing.assert_allclose(g.radii, (np.arange(10) + 0.5) * 10e-6)
    assert g.total_ions == pytest.approx(RHO * L * math.pi * (100e-6) ** 2, rel=1e-14)
    with pytest.raises(ValueError):
        g.populations[0] = 1.0


def test_shell_grid_rejects_bad_count():
    with pytest.raises(ValueError):
        build_shell_grid(geom(1e-6), 0)


def test_default_n_shells_rule():
    tem = ModeProfile.tem00(W)
    assert default_n_shells(100e-6, tem, tem) == math.ceil(40 * 100 / 37)
    assert default_n_shells(10e-6, tem) == 40
    assert default_n_shells(100e-6, ModeProfile.uniform()) == 40
    assert default_n_shells(0.0, tem) == 1
    assert default_n_shells(1.0, tem) == MAX_SHELLS


def test_effective_atom_number_quoted_values():
    tem = ModeProfile.tem00(W)
    R = 100e-6
    N = effective_atom_number(build_shell_grid(geom(R), default_n_shells(R, tem)), tem)
    assert N == pytest.approx(3936, rel=0.01)
    R = 0.95 * W
    N = effective_atom_number(build_shell_grid(geom(R), default_n_shells(R, tem)), tem)
    assert N == pytest.approx(3279, rel=0.02)


@pytest.mark.parametrize("probe", [ModeProfile.tem00(W), ModeProfile.lg01(W)])
def test_effective_atom_number_closed_form_against_quadrature(probe):
    R = 60e-6
    sigma = RHO * L
    ref, _ = sci.quad(lambda r: sigma * probe(r) ** 2 * 2 * math.pi * r, 0, R, epsabs=0, epsrel=1e-12)
    assert effective_atom_number_exact(geom(R), probe) == pytest.approx(ref, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(R_over_w=st.floats(0.05, 4.0), kind=st.sampled_from(["TEM00", "LG01"]))
def test_grid_sum_converges_to_closed_form(R_over_w, kind):
    probe = ModeProfile(kind, W)
    g = geom(R_over_w * W)
    grid = build_shell_grid(g, default_n_shells(g.radius, probe))
    exact = effective_atom_number_exact(g, probe)
    # midpoint rule with d <= w/40
    assert effective_atom_number(grid, probe) == pytest.approx(exact, rel=5e-4)


@settings(max_examples=40, deadline=None)
@given(R=st.floats(1e-6, 300e-6), n=st.integers(1, 500))
def test_populations_sum_exactly(R, n):
    g = geom(R)
    assert build_shell_grid(g, n).total_ions == pytest.approx(g.total_ions, rel=1e-12)


def test_modes_share_saturation():
    big = geom(6 * W)
    tem = effective_atom_number_exact(big, ModeProfile.tem00(W))
    lg = effective_atom_number_exact(big, ModeProfile.lg01(W))
    assert lg == pytest.approx(tem, rel=1e-10)


def test_cooperativity():
    rates = SystemRates.reference()
    C = cooperativity(rates, 3936)
    assert C == pytest.approx(rates.g**2 * 3936 / (2 * rates.kappa * rates.gamma))
    assert C == pytest.approx(15.9, abs=0.05)
    with pytest.raises(ValueError):
        cooperativity(SystemRates(1.0, 1.0, 0.0), 10)


@given(st.floats(0, 1e4))
def test_analytic_bound_in_unit_interval(C):
    eta = analytic_optimal_efficiency(C)
    assert 0 <= eta < 1 or C > 1e3


def test_analytic_bound_values():
    assert analytic_optimal_efficiency(0) == 0
    assert analytic_optimal_efficiency(15.9) == pytest.approx((31.8 / 32.8) ** 2)
    with pytest.raises(ValueError):
        analytic_optimal_efficiency(-1)
