import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavity_eit import (
    CrystalGeometry,
    ModeProfile,
    SimulationConfig,
    SystemRates,
    radial_excitation_density,
    run_sequence,
)
from cavity_eit.dynamics import (
    CollectiveState,
    ShellState,
    build_model,
    collective_rhs,
    output_field,
    shell_rhs,
)

W = 37e-6


@pytest.fixture(scope="module")
def small_finite():
    return SimulationConfig.baseline(extended=False, A=2.45, n_shells=24)


def dense_generator(model, t):
    """Independent oracle: assemble the linear generator as an explicit matrix."""
    n = model.n
    r = model.rates
    om = model.drive.omega(t) * model.psi_c
    M = np.zeros((2 * n + 1, 2 * n + 1), complex)
    M[0, 0] = -r.kappa
    for j in range(n):
        M[0, 1 + j] = 1j * model.coupling[j]
        M[1 + j, 0] = 1j * model.coupling[j]
        M[1 + j, 1 + j] = -r.gamma
        M[1 + j, 1 + n + j] = 1j * om[j]
        M[1 + n + j, 1 + j] = 1j * om[j]
        M[1 + n + j, 1 + n + j] = -r.gamma0
    return M


def test_output_field():
    k = 2.0
    assert output_field(1.0, 0.5, k) == pytest.approx(2.0 - 0.5)


def test_state_pack_roundtrip():
    s = ShellState(1 + 2j, np.array([1j, 2.0]), np.array([3.0, -1j]))
    back = ShellState.unpack(s.pack())
    assert back.a == s.a
    np.testing.assert_array_equal(back.S, s.S)
    with pytest.raises(ValueError):
        ShellState.unpack(np.zeros(4))
    assert CollectiveState.unpack(CollectiveState(1, 2, 3).pack()) == CollectiveState(1, 2, 3)


@pytest.mark.parametrize("t", [-3e-6, 0.0, 12e-6, 31e-6])
def test_shell_rhs_matches_dense_matrix(small_finite, t):
    cfg = small_finite.replace(rates=replace(small_finite.rates, gamma0=2 * math.pi * 1e3))
    model = build_model(cfg)
    rng = np.random.default_rng(3)
    y = rng.normal(size=model.dim) + 1j * rng.normal(size=model.dim)
    drive = np.zeros(model.dim, complex)
    drive[0] = math.sqrt(2 * cfg.rates.kappa) * model.drive.a_in(t)
    np.testing.assert_allclose(shell_rhs(t, y, model), dense_generator(model, t) @ y + drive, rtol=1e-12)


def test_rhs_shape_checks(small_finite):
    model = build_model(small_finite)
    with pytest.raises(ValueError):
        shell_rhs(0.0, np.zeros(model.dim + 1), model)
    ext = build_model(small_finite.replace(control=ModeProfile.uniform()), "collective")
    with pytest.raises(ValueError):
        collective_rhs(0.0, np.zeros(4), ext)


def test_collective_needs_uniform_control(small_finite):
    with pytest.raises(ValueError):
        build_model(small_finite, "collective")
    with pytest.raises(ValueError):
        build_model(small_finite, "bogus")


def test_collective_projection_is_exact_for_uniform_control(small_finite):
    cfg = small_finite.replace(control=ModeProfile.uniform())
    shell = build_model(cfg)
    coll = build_model(cfg, "collective")
    rng = np.random.default_rng(0)
    # start from a state inside the collective subspace
    a, P, S = 0.3 + 0.1j, 0.2 - 0.4j, 0.5j
    w = shell.weights / math.sqrt(shell.n_eff)
    y = np.concatenate(([a], P * w, S * w))
    t = rng.uniform(-5e-6, 35e-6)
    proj = shell.collective_projection(shell.rhs(t, y))
    np.testing.assert_allclose(proj, coll.rhs(t, np.array([a, P, S])), rtol=1e-12)


def test_engines_agree(small_finite):
    fast = run_sequence(small_finite, engine="compiled")
    ref = run_sequence(small_finite, engine="python")
    assert fast.eta_tot == pytest.approx(ref.eta_tot, abs=1e-10)
    np.testing.assert_allclose(fast.a, ref.a, atol=1e-9)
    np.testing.assert_allclose(fast.S_final_write, ref.S_final_write, atol=1e-9)
    assert fast.diagnostics["n_steps"] == ref.diagnostics["n_steps"]


def test_unknown_engine(small_finite):
    with pytest.raises(ValueError):
        run_sequence(small_finite, engine="gpu")


def test_efficiency_bookkeeping(extended_result):
    r = extended_result
    assert 0 < r.eta_tot <= 1
    assert r.eta_tot == pytest.approx(r.eta_w * r.eta_r * (np.sum(np.abs(r.S_read_start) ** 2)
                                                          / r.stored_excitation), rel=1e-12)
    assert r.diagnostics["photons_in"] == pytest.approx(1.0, abs=1e-4)
    assert r.diagnostics["quadrature_error"] < 1e-6


def test_norm_balance_holds_with_decay(extended_result, finite_result):
    for r in (extended_result, finite_result):
        assert r.diagnostics["norm_residual"] < 1e-6


def test_lossless_norm_conservation(extended_config):
    cfg = extended_config.replace(rates=replace(extended_config.rates, gamma=0.0),
                                  design_rates=extended_config.rates)
    r = run_sequence(cfg)
    assert r.diagnostics["photons_lost"] == 0.0
    assert r.diagnostics["norm_residual"] < 1e-6


def test_shell_matches_collective(extended_config):
    shell = run_sequence(extended_config)
    coll = run_sequence(extended_config, model="collective")
    assert shell.eta_tot == pytest.approx(coll.eta_tot, abs=1e-6)
    np.testing.assert_allclose(shell.a, coll.a, atol=1e-6 * np.max(np.abs(coll.a)))
    assert shell.stored_excitation == pytest.approx(coll.stored_excitation, abs=1e-6)


def test_no_control_stores_nothing(finite_config):
    r = run_sequence(finite_config.replace(control_enabled=False))
    assert r.eta_w < 1e-12
    assert r.eta_tot < 1e-10
    assert np.all(r.omega == 0)


def test_finite_waist_reflects_light(finite_config, extended_result):
    r = run_sequence(finite_config.with_amplitude(1.0))
    assert r.eta_w < extended_result.eta_w - 0.05
    write = r.times <= finite_config.schedule.T_w
    reflected = np.trapezoid(np.abs(r.a_out[write]) ** 2, r.times[write])
    assert reflected > 0.05


def test_ground_state_decay_during_storage(extended_config):
    g0 = 2 * math.pi * 2e3
    cfg = extended_config.replace(rates=replace(extended_config.rates, gamma0=g0))
    r = run_sequence(cfg)
    ratio = np.sum(np.abs(r.S_read_start) ** 2) / r.stored_excitation
    assert ratio == pytest.approx(math.exp(-2 * g0 * cfg.schedule.T_s), rel=1e-6)


@settings(max_examples=6, deadline=None)
@given(mag=st.floats(0.05, 20.0), phase=st.floats(-math.pi, math.pi))
def test_linearity_and_phase(small_finite, mag, phase):
    c = mag * complex(math.cos(phase), math.sin(phase))
    base = run_sequence(small_finite)
    scaled = run_sequence(small_finite.replace(input_amplitude=c))
    for name in ("eta_w", "eta_r", "eta_tot"):
        assert abs(getattr(scaled, name) - getattr(base, name)) <= 1e-10
    np.testing.assert_allclose(scaled.S_final_write, c * base.S_final_write,
                               atol=1e-9 * mag, rtol=0)


def test_radial_density_shapes(finite_result):
    r, s = radial_excitation_density(finite_result.S_final_write, finite_result.grid)
    assert r.shape == s.shape
    assert np.all(s >= 0)
    with pytest.raises(ValueError):
        radial_excitation_density(finite_result.S_final_write[:-1], finite_result.grid)


def test_radial_density_broader_than_probe_at_large_radius():
    cfg = SimulationConfig.baseline(extended=False, radius=2.7 * W, A=2.6)
    res = run_sequence(cfg)
    r, s = radial_excitation_density(res.S_final_write, res.grid)
    n = res.grid.populations
    ref = cfg.probe(r) ** 2
    spread = np.sqrt(np.sum(n * s * r**2) / np.sum(n * s))
    ref_spread = np.sqrt(np.sum(n * ref * r**2) / np.sum(n * ref))
    assert spread > 1.05 * ref_spread


def test_extended_density_follows_probe(extended_result, extended_config):
    r, s = radial_excitation_density(extended_result.S_final_write, extended_result.grid)
    ref = extended_config.probe(r) ** 2
    np.testing.assert_allclose(s / s[0], ref / ref[0], atol=1e-6)


def test_shell_doubling_converges(finite_config):
    n = finite_config.resolved_n_shells
    a = run_sequence(finite_config.replace(n_shells=n)).eta_tot
    b = run_sequence(finite_config.replace(n_shells=2 * n)).eta_tot
    assert abs(a - b) <= 1e-4


def test_tolerance_halving_within_error_estimate(finite_config):
    a = run_sequence(finite_config)
    b = run_sequence(finite_config.replace(rtol=finite_config.rtol / 2, atol=finite_config.atol / 2))
    assert abs(a.eta_tot - b.eta_tot) <= max(a.diagnostics["error_estimate"], 1e-9)


def test_config_validation():
    with pytest.raises(ValueError):
        SimulationConfig.baseline(rtol=1e-2)
    with pytest.raises(ValueError):
        SimulationConfig.baseline(n_shells=0)


def test_zero_radius_crystal_is_empty_cavity():
    cfg = SimulationConfig(
        rates=SystemRates.reference(),
        geometry=CrystalGeometry(rho=6.1e14, length=3e-3, radius=0.0),
        probe=ModeProfile.tem00(W), control=ModeProfile.tem00(W),
        schedule=SimulationConfig.baseline().schedule,
        design_rates=SystemRates.reference(),
    )
    with pytest.warns(RuntimeWarning):
        res = run_sequence(cfg)
    assert res.n_eff == 0.0
    assert res.eta_w == 0.0


def _collective(extended_config, **rate_changes):
    cfg = extended_config.replace(rates=replace(extended_config.rates, **rate_changes),
                                  design_rates=extended_config.rates)
    return cfg, build_model(cfg, "collective")


def test_collective_steady_state_with_constant_drive(extended_config):
    from cavity_eit.integrate import integrate

    cfg, m = _collective(extended_config)
    r = cfg.rates
    u = 1.0
    rhs = lambda t, y: np.array([  # noqa: E731  control off, constant input
        -r.kappa * y[0] + 1j * m.g_N * y[1] + math.sqrt(2 * r.kappa) * u,
        -r.gamma * y[1] + 1j * m.g_N * y[0],
        0.0,
    ])
    traj = integrate(rhs, np.zeros(3, complex), (0.0, 60 / r.kappa), rtol=1e-10, atol=1e-14)
    expected = math.sqrt(2 * r.kappa) * u / (r.kappa + m.g_N**2 / r.gamma)
    assert traj.y_final[0] == pytest.approx(expected, rel=1e-8)


def test_spin_frozen_without_control(extended_config):
    cfg = extended_config.replace(input_amplitude=0.0)
    m = build_model(cfg, "collective")
    # inside the dark store window Omega = 0, so S neither moves nor drives a
    y = np.array([0.0, 0.0, 0.4 - 0.2j])
    d = m.rhs(15e-6, y)
    assert d[2] == 0
    assert d[0] == 0


def test_zero_state_has_zero_derivative_without_input(small_finite):
    m = build_model(small_finite.replace(input_amplitude=0.0))
    assert np.all(m.rhs(0.0, np.zeros(m.dim, complex)) == 0)


def test_empty_cavity_is_all_pass(extended_config):
    r = run_sequence(extended_config.replace(rates=replace(extended_config.rates, g=0.0),
                                             design_rates=extended_config.rates))
    total_out = np.trapezoid(np.abs(r.a_out) ** 2, r.times)
    total_in = np.trapezoid(np.abs(r.a_in) ** 2, r.times)
    assert total_out == pytest.approx(total_in, rel=1e-6)
    assert r.stored_excitation == 0.0


def test_probe_norm_over_write_window():
    from cavity_eit.pulses import probe_input

    T = 2e-6
    t = np.linspace(-5 * T, 5 * T, 20001)
    assert np.trapezoid(probe_input(t, T) ** 2, t) == pytest.approx(1.0, abs=1e-6)
