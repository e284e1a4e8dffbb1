"""Self-checks run by ``cavity-eit validate``.

Each suite returns a :class:`Check` with the measured figure and the
threshold it is held to.  The suites run on a given base configuration,
by default the finite-waist TEM00 crystal with R = 100 um.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    build_shell_grid,
    effective_atom_number,
    effective_atom_number_exact,
)
from .dynamics import SimulationConfig, run_sequence
from .integrate import integrate


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: {self.value:.3e} (limit {self.threshold:.1e}) {self.detail}".rstrip()


def _check(name, value, threshold, detail=""):
    return Check(name, bool(value <= threshold), float(value), threshold, detail)


def norm_conservation(config: SimulationConfig, threshold: float = 1e-6) -> Check:
    """Photon-number balance with all atomic decay switched off."""
    lossless = config.replace(rates=replace(config.rates, gamma=0.0, gamma0=0.0),
                              design_rates=config.pulse_rates)
    res = run_sequence(lossless)
    return _check("norm conservation (gamma = gamma0 = 0)", res.diagnostics["norm_residual"],
                  threshold, f"photons_lost={res.diagnostics['photons_lost']:.1e}")


def oracle_equivalence(config: SimulationConfig, threshold: float = 1e-6) -> Check:
    """Shell model with uniform control against the three-mode collective model.

    The pass figure is the total-efficiency gap; the relative cavity-field
    deviation is reported alongside.
    """
    from .core import ModeProfile

    ext = config.replace(control=ModeProfile.uniform())
    shell = run_sequence(ext, model="shell")
    coll = run_sequence(ext, model="collective")
    d_eta = abs(shell.eta_tot - coll.eta_tot)
    d_a = float(np.max(np.abs(shell.a - coll.a)) / np.max(np.abs(coll.a)))
    return _check("shell vs collective oracle (uniform control)", d_eta, threshold,
                  f"d_a_rel={d_a:.1e}")


def linearity(config: SimulationConfig, threshold: float = 1e-10,
              factor: complex = 0.7 * np.exp(0.9j)) -> Check:
    """A complex rescaling of the input must leave every efficiency unchanged."""
    base = run_sequence(config)
    scaled = run_sequence(config.replace(input_amplitude=factor))
    diff = max(abs(base.eta_w - scaled.eta_w), abs(base.eta_r - scaled.eta_r),
               abs(base.eta_tot - scaled.eta_tot))
    spin = np.max(np.abs(scaled.S_final_write - factor * base.S_final_write))
    return _check("linearity / phase invariance", diff, threshold,
                  f"spin_amplitude_dev={spin:.1e}")


def grid_convergence(config: SimulationConfig, threshold: float = 1e-4) -> Check:
    n = config.resolved_n_shells
    coarse = run_sequence(config.replace(n_shells=n)).eta_tot
    fine = run_sequence(config.replace(n_shells=2 * n)).eta_tot
    return _check("shell-grid convergence", abs(fine - coarse), threshold,
                  f"n={n}->{2 * n}")


def step_response(kappa: float = 2 * math.pi * 1.5e6, u: float = 1e3,
                  rtol: float = 1e-10, threshold: float = 1e-8) -> Check:
    """Empty cavity driven by a constant input against the exponential solution."""
    sqrt2k = math.sqrt(2 * kappa)
    t_end = 8.0 / kappa
    t = np.linspace(0.0, t_end, 401)
    traj = integrate(lambda _, y: -kappa * y + sqrt2k * u, np.array([0j]), (0.0, t_end),
                     t_eval=t, rtol=rtol, atol=1e-14)
    exact = sqrt2k * u * -np.expm1(-kappa * t) / kappa
    err = float(np.max(np.abs(traj.y[:, 0] - exact)) / np.max(np.abs(exact)))
    return _check("empty-cavity step response", err, threshold)


def grid_invariants(config: SimulationConfig, threshold: float = 1e-4) -> Check:
    """Shell populations sum to rho L pi R^2; N matches its continuum limit."""
    geom = config.geometry
    grid = build_shell_grid(geom, max(config.resolved_n_shells, 200))
    total_dev = abs(grid.total_ions - geom.total_ions) / max(geom.total_ions, 1e-300)
    n_dev = 0.0
    exact = effective_atom_number_exact(geom, config.probe)
    if exact > 0:
        n_dev = abs(effective_atom_number(grid, config.probe) - exact) / exact
    return _check("shell populations and N_eff", max(total_dev, n_dev), threshold,
                  f"sum_dev={total_dev:.1e} N_dev={n_dev:.1e}")


SUITES = (
    ("norm", norm_conservation),
    ("oracle", oracle_equivalence),
    ("linearity", linearity),
    ("grid", grid_convergence),
    ("step", None),
    ("populations", grid_invariants),
)


def run_all(config: SimulationConfig | None = None) -> list[Check]:
    if config is None:
        config = SimulationConfig.baseline(extended=False, A=2.45)
    checks = []
    for _, suite in SUITES:
        checks.append(step_response() if suite is None else suite(config))
    return checks
