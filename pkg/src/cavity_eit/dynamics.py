"""Write-store-read dynamics of the cavity field coupled to the ion shells.

State vectors are flat complex arrays.  For the shell model the layout is
``[a, P_1..P_n, S_1..S_n]``; for the collective model ``[a, P, S]``.

Shell amplitudes use a symmetric normalisation: ``|P_j|^2`` and ``|S_j|^2``
are excitation numbers, and the cavity couples to shell j with strength
``g sqrt(n_j) Psi_p(r_j)``.  With a uniform control field the collective
combination ``sum_j sqrt(n_j) Psi_p(r_j) S_j / sqrt(N)`` obeys exactly the
three-mode equations of :class:`CollectiveModel`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    CrystalGeometry,
    ModeProfile,
    ShellGrid,
    SystemRates,
    build_shell_grid,
    cooperativity,
    default_n_shells,
    effective_atom_number,
    mode_amplitude,
)
from .integrate import IntegrationError, integrate
from .pulses import (
    PulseSchedule,
    adiabaticity,
    check_adiabatic,
    control_envelope,
    probe_input,
    write_plateau,
)

#: Reporting-grid density, samples per cavity decay time 1/kappa.
SAMPLES_PER_DECAY = 20


def output_field(a, a_in, kappa: float):
    """Input-output relation of a single-ended lossless cavity."""
    return math.sqrt(2.0 * kappa) * np.asarray(a) - np.asarray(a_in)


@dataclass(frozen=True)
class ShellState:
    a: complex
    P: np.ndarray
    S: np.ndarray

    def pack(self) -> np.ndarray:
        return np.concatenate(([self.a], self.P, self.S)).astype(complex)

    @classmethod
    def unpack(cls, y) -> "ShellState":
        y = np.asarray(y)
        n = (y.size - 1) // 2
        if y.size != 2 * n + 1:
            raise ValueError(f"shell state must have odd length, got {y.size}")
        return cls(complex(y[0]), y[1:n + 1].copy(), y[n + 1:].copy())

    @classmethod
    def vacuum(cls, n: int) -> "ShellState":
        return cls(0j, np.zeros(n, complex), np.zeros(n, complex))


@dataclass(frozen=True)
class CollectiveState:
    a: complex
    P: complex
    S: complex

    def pack(self) -> np.ndarray:
        return np.array([self.a, self.P, self.S], dtype=complex)

    @classmethod
    def unpack(cls, y) -> "CollectiveState":
        if len(y) != 3:
            raise ValueError(f"collective state has 3 components, got {len(y)}")
        return cls(complex(y[0]), complex(y[1]), complex(y[2]))


class _Drive:
    """Scalar probe and control envelopes, evaluated with plain ``math``."""

    def __init__(self, sched: PulseSchedule, gamma: float, C: float, enabled: bool = True,
                 scale: complex = 1.0):
        self.sched = sched
        self.scale = scale
        self.gamma = gamma
        self.C = C
        self.enabled = enabled
        self._inv_sqrt_T = 1.0 / math.sqrt(sched.T)
        self._W_w = write_plateau(gamma, C, sched.T, sched.A_w) if enabled else 0.0
        self._W_r = write_plateau(gamma, C, sched.T, sched.A_r) if enabled else 0.0
        self._read_epoch = sched.T_r + sched.T_s

    def a_in(self, t: float) -> float:
        x = abs(2.0 * t / self.sched.T)
        return 0.0 if x > 700 else self.scale * self._inv_sqrt_T / math.cosh(x)

    @staticmethod
    def _shape(x: float) -> float:
        # (1 + e^x)^(-1/2)
        if x > 0:
            return math.exp(-0.5 * x) / math.sqrt(1.0 + math.exp(-x))
        return 1.0 / math.sqrt(1.0 + math.exp(x))

    def omega(self, t: float) -> float:
        s = self.sched
        if t <= s.T_w:
            return self._W_w * self._shape(4.0 * t / s.T)
        if t >= s.T_r:
            return self._W_r * self._shape(4.0 * (self._read_epoch - t) / s.T)
        return 0.0

    def omega_series(self, t):
        if not self.enabled:
            return np.zeros_like(np.asarray(t, dtype=float))
        return control_envelope(t, self.sched, self.gamma, self.C)


class ShellModel:
    """Cavity mode coupled to ``n`` radial shells, each with its own P_j and S_j."""

    def __init__(self, rates: SystemRates, grid: ShellGrid, probe: ModeProfile,
                 control: ModeProfile, drive: _Drive):
        self.rates = rates
        self.grid = grid
        self.probe = probe
        self.control = control
        self.drive = drive
        self.n = grid.n_shells
        self.weights = np.sqrt(grid.populations) * mode_amplitude(probe, grid.radii)
        self.coupling = rates.g * self.weights
        self.psi_c = np.asarray(mode_amplitude(control, grid.radii), dtype=float)
        self.n_eff = float(self.weights @ self.weights)
        self._sqrt2k = math.sqrt(2.0 * rates.kappa)

    @property
    def dim(self) -> int:
        return 2 * self.n + 1

    def split(self, y):
        n = self.n
        return y[..., 0], y[..., 1:n + 1], y[..., n + 1:]

    def spin_amplitudes(self, y):
        return y[..., self.n + 1:]

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        n = self.n
        r = self.rates
        a = y[0]
        P = y[1:n + 1]
        S = y[n + 1:]
        oc = 1j * self.drive.omega(t) * self.psi_c
        out = np.empty_like(y)
        out[0] = -r.kappa * a + 1j * (self.coupling @ P) + self._sqrt2k * self.drive.a_in(t)
        out[1:n + 1] = -r.gamma * P + 1j * a * self.coupling + oc * S
        out[n + 1:] = oc * P
        if r.gamma0:
            out[n + 1:] -= r.gamma0 * S
        return out

    def collective_projection(self, y):
        """Collapse shell amplitudes onto the probe-weighted collective mode."""
        a, P, S = self.split(np.asarray(y))
        norm = math.sqrt(self.n_eff) if self.n_eff > 0 else 1.0
        return a, P @ self.weights / norm, S @ self.weights / norm


class CollectiveModel:
    """Three-mode (a, P, S) equations valid for a spatially uniform control field."""

    n = 1

    def __init__(self, rates: SystemRates, n_eff: float, drive: _Drive):
        if n_eff < 0:
            raise ValueError("effective atom number must be >= 0")
        self.rates = rates
        self.n_eff = n_eff
        self.drive = drive
        self.g_N = rates.g * math.sqrt(n_eff)
        self._sqrt2k = math.sqrt(2.0 * rates.kappa)

    @property
    def dim(self) -> int:
        return 3

    def split(self, y):
        return y[..., 0], y[..., 1:2], y[..., 2:3]

    def spin_amplitudes(self, y):
        return y[..., 2:3]

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        r = self.rates
        a, P, S = y[0], y[1], y[2]
        om = self.drive.omega(t)
        return np.array([
            -r.kappa * a + 1j * self.g_N * P + self._sqrt2k * self.drive.a_in(t),
            -r.gamma * P + 1j * self.g_N * a + 1j * om * S,
            -r.gamma0 * S + 1j * om * P,
        ])


def shell_rhs(t: float, y, model: ShellModel) -> np.ndarray:
    """Time derivative of a packed shell state (see module docstring for layout)."""
    y = np.asarray(y, dtype=complex)
    if y.shape != (model.dim,):
        raise ValueError(f"state has shape {y.shape}, grid expects ({model.dim},)")
    return model.rhs(t, y)


def collective_rhs(t: float, y, model: CollectiveModel) -> np.ndarray:
    y = np.asarray(y, dtype=complex)
    if y.shape != (3,):
        raise ValueError(f"collective state must have shape (3,), got {y.shape}")
    return model.rhs(t, y)


@dataclass(frozen=True)
class SimulationConfig:
    """Everything needed for one write-store-read run (SI units, rad/s)."""

    rates: SystemRates
    geometry: CrystalGeometry
    probe: ModeProfile
    control: ModeProfile
    schedule: PulseSchedule
    n_shells: int | None = None
    rtol: float = 1e-8
    atol: float = 1e-10
    samples_per_decay: int = SAMPLES_PER_DECAY
    control_enabled: bool = True
    # rates used to shape the control pulse; defaults to ``rates``
    design_rates: SystemRates | None = None
    # complex prefactor applied to the probe envelope; ``atol`` is quoted per
    # unit amplitude and scaled by |input_amplitude| so scaled runs step identically
    input_amplitude: complex = 1.0

    def __post_init__(self):
        if self.n_shells is not None and self.n_shells < 1:
            raise ValueError("n_shells must be >= 1")
        if self.samples_per_decay < 20:
            raise ValueError("samples_per_decay must be >= 20")
        if not 1e-12 <= self.rtol <= 1e-4:
            raise ValueError(f"rtol must lie in [1e-12, 1e-4], got {self.rtol!r}")

    @property
    def resolved_n_shells(self) -> int:
        if self.n_shells is not None:
            return self.n_shells
        return default_n_shells(self.geometry.radius, self.probe, self.control)

    def grid(self) -> ShellGrid:
        return build_shell_grid(self.geometry, self.resolved_n_shells)

    def n_eff(self) -> float:
        return effective_atom_number(self.grid(), self.probe)

    def cooperativity(self) -> float:
        return cooperativity(self.rates, self.n_eff())

    @property
    def pulse_rates(self) -> SystemRates:
        return self.design_rates if self.design_rates is not None else self.rates

    def replace(self, **changes) -> "SimulationConfig":
        return replace(self, **changes)

    def with_radius(self, radius: float, n_shells: int | None = None) -> "SimulationConfig":
        geom = replace(self.geometry, radius=radius)
        return replace(self, geometry=geom, n_shells=n_shells)

    def with_amplitude(self, A_w: float, A_r: float | None = None) -> "SimulationConfig":
        return replace(self, schedule=self.schedule.with_amplitudes(A_w, A_r))

    @classmethod
    def baseline(cls, extended: bool = True, radius: float = 100e-6, A: float = 1.0,
                       probe_kind: str = "TEM00", T: float = 2e-6, **kwargs) -> "SimulationConfig":
        """Ca+ crystal in the cavity: rho = 6.1e8 cm^-3, L = 3 mm, w_p = 37 um, T = 2 us."""
        probe = ModeProfile(probe_kind, 37e-6)
        control = ModeProfile.uniform() if extended else probe
        return cls(
            rates=SystemRates.reference(),
            geometry=CrystalGeometry(rho=6.1e14, length=3e-3, radius=radius),
            probe=probe,
            control=control,
            schedule=PulseSchedule.default(T=T, A=A),
            **kwargs,
        )


@dataclass
class SimulationResult:
    times: np.ndarray
    a_in: np.ndarray
    a: np.ndarray
    a_out: np.ndarray
    omega: np.ndarray
    spin_excitation: np.ndarray
    S_final_write: np.ndarray
    S_read_start: np.ndarray
    eta_w: float
    eta_r: float
    eta_tot: float
    n_eff: float
    C: float
    grid: ShellGrid | None
    diagnostics: dict = field(default_factory=dict)

    @property
    def stored_excitation(self) -> float:
        return float(np.sum(np.abs(self.S_final_write) ** 2))


def _phase_grid(t0: float, t1: float, dt: float) -> np.ndarray:
    n = max(2, int(math.ceil((t1 - t0) / dt)) + 1)
    return np.linspace(t0, t1, n)


def build_model(config: SimulationConfig, model: str = "shell"):
    grid = config.grid()
    n_eff = effective_atom_number(grid, config.probe)
    design = config.pulse_rates
    C = cooperativity(design, n_eff)
    drive = _Drive(config.schedule, design.gamma, C, config.control_enabled,
                   config.input_amplitude)
    if model == "shell":
        return ShellModel(config.rates, grid, config.probe, config.control, drive)
    if model == "collective":
        if not config.control.is_uniform:
            raise ValueError("the collective model requires a uniform control field")
        return CollectiveModel(config.rates, n_eff, drive)
    raise ValueError(f"unknown model {model!r}")


def run_sequence(config: SimulationConfig, model: str = "shell",
                 engine: str = "compiled") -> SimulationResult:
    """Simulate a full write-store-read sequence from the vacuum state.

    Efficiencies are trapezoidal quadratures of the field intensities on the
    reporting grid.  The integrated right-hand side also carries three
    energy accumulators (photons in, photons out, photons lost to atomic
    decay) which feed the norm-balance diagnostic.

    ``engine="compiled"`` runs the numba kernel; ``engine="python"`` drives
    :func:`~cavity_eit.integrate.integrate` with the model's ``rhs`` and is
    kept as the reference implementation.
    """
    mdl = build_model(config, model)
    rates = config.rates
    sched = config.schedule
    drive = mdl.drive

    if config.control_enabled:
        check_adiabatic(sched.T, drive.C, drive.gamma)

    dt = 1.0 / (config.samples_per_decay * rates.kappa)
    bounds = [sched.t_start, sched.T_w, sched.T_r, sched.t_end]
    grids = [_phase_grid(t0, t1, dt)[(1 if k else 0):]
             for k, (t0, t1) in enumerate(zip(bounds[:-1], bounds[1:]))]
    times = np.concatenate(grids)

    if engine == "compiled":
        obs, snapshots, stats = _run_compiled(mdl, bounds, grids, times, config)
    elif engine == "python":
        obs, snapshots, stats = _run_python(mdl, bounds, grids, config)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return _assemble(config, mdl, times, obs, snapshots, stats)


def _scaled_atol(config):
    scale = abs(config.input_amplitude)
    return config.atol * scale if scale > 0 else config.atol


def _model_arrays(mdl):
    if isinstance(mdl, ShellModel):
        return mdl.coupling, mdl.psi_c
    return np.array([mdl.g_N]), np.ones(1)


def _run_compiled(mdl, bounds, grids, times, config):
    from ._kernel import STATUS_OK, run_shells

    rates = config.rates
    sched = config.schedule
    drive = mdl.drive
    coupling, psi_c = _model_arrays(mdl)
    rate_vec = np.array([rates.kappa, rates.gamma, rates.gamma0, math.sqrt(2.0 * rates.kappa)])
    drive_vec = np.array([1.0 / math.sqrt(sched.T), sched.T, drive._W_w, drive._W_r,
                          sched.T_w, sched.T_r, drive._read_epoch])
    phase_end = np.cumsum([g.size for g in grids]).astype(np.int64)
    a, optical, spin, ledger, snaps, st, status = run_shells(
        np.ascontiguousarray(coupling, dtype=float), np.ascontiguousarray(psi_c, dtype=float),
        rate_vec, drive_vec, complex(config.input_amplitude), np.asarray(bounds, dtype=float), times, phase_end,
        config.rtol, _scaled_atol(config))
    if status != STATUS_OK:
        raise IntegrationError("step size underflow", float(st[4]))
    obs = {"a": a, "optical": optical, "spin": spin, "ledger": ledger}
    stats = {"n_steps": int(st[0]), "n_rejected": int(st[1]), "n_fev": int(st[2]),
             "error_estimate": float(st[3])}
    dim = mdl.dim
    return obs, [s[:dim] for s in snaps], stats


def _run_python(mdl, bounds, grids, config):
    rates = config.rates
    drive = mdl.drive
    sqrt2k = math.sqrt(2.0 * rates.kappa)
    dim = mdl.dim
    n = mdl.n

    def augmented(t, y):
        core = mdl.rhs(t, y[:dim])
        a_in = drive.a_in(t)
        a_out = sqrt2k * y[0] - a_in
        P = y[1:n + 1]
        S = y[n + 1:dim]
        loss = 2.0 * rates.gamma * np.vdot(P, P).real
        if rates.gamma0:
            loss += 2.0 * rates.gamma0 * np.vdot(S, S).real
        return np.concatenate((core, [abs(a_in) ** 2, a_out.real**2 + a_out.imag**2, loss]))

    def observe(block):
        a, P, S = mdl.split(block[:, :dim])
        return {
            "a": a.copy(),
            "optical": np.sum(np.abs(P) ** 2, axis=-1),
            "spin": np.sum(np.abs(S) ** 2, axis=-1),
            "ledger": block[:, dim:].real.copy(),
        }

    y = np.zeros(dim + 3, dtype=complex)
    pieces, snapshots = [], []
    stats = {"n_steps": 0, "n_rejected": 0, "n_fev": 0, "error_estimate": 0.0}
    for t0, t1, t_eval in zip(bounds[:-1], bounds[1:], grids):
        traj = integrate(augmented, y, (t0, t1), t_eval=t_eval,
                         rtol=config.rtol, atol=_scaled_atol(config), observe=observe)
        y = traj.y_final
        snapshots.append(y[:dim].copy())
        pieces.append(traj.y)
        stats["n_steps"] += traj.n_steps
        stats["n_rejected"] += traj.n_rejected
        stats["n_fev"] += traj.n_fev
        stats["error_estimate"] += traj.error_estimate
    obs = {key: np.concatenate([p[key] for p in pieces]) for key in pieces[0]}
    return obs, snapshots, stats


def _assemble(config, mdl, times, obs, snapshots, stats) -> SimulationResult:
    rates = config.rates
    sched = config.schedule
    drive = mdl.drive
    a = obs["a"]
    a_in = config.input_amplitude * probe_input(times, sched.T)
    if np.isrealobj(config.input_amplitude):
        a_in = np.asarray(a_in, dtype=float)
    a_out = output_field(a, a_in, rates.kappa)

    write = times <= sched.T_w
    read = times >= sched.T_r
    photons_in = np.trapezoid(np.abs(a_in[write]) ** 2, times[write])
    photons_out = np.trapezoid(np.abs(a_out[read]) ** 2, times[read])
    S_write = mdl.spin_amplitudes(snapshots[0]).copy()
    S_read = mdl.spin_amplitudes(snapshots[1]).copy()
    stored_write = float(np.sum(np.abs(S_write) ** 2))
    stored_read = float(np.sum(np.abs(S_read) ** 2))

    eta_tot = photons_out / photons_in
    eta_w = stored_write / photons_in
    eta_r = photons_out / stored_read if stored_read > 0 else 0.0

    ledger = obs["ledger"]
    balance = (ledger[:, 1] + np.abs(a) ** 2 + obs["optical"] + obs["spin"]
               + ledger[:, 2] - ledger[:, 0])
    i_w = int(np.count_nonzero(write)) - 1
    i_r = int(np.argmax(read))
    eta_tot_accum = (ledger[-1, 1] - ledger[i_r, 1]) / (ledger[i_w, 0] - ledger[0, 0])

    diagnostics = {
        "norm_residual": float(np.max(np.abs(balance)) / ledger[-1, 0]),
        "adiabaticity": adiabaticity(sched.T, drive.C, drive.gamma),
        "quadrature_error": float(abs(eta_tot - eta_tot_accum)),
        **stats,
        "photons_in": float(photons_in),
        "photons_out": float(photons_out),
        "photons_lost": float(ledger[-1, 2]),
    }
    return SimulationResult(
        times=times,
        a_in=a_in,
        a=a,
        a_out=a_out,
        omega=drive.omega_series(times),
        spin_excitation=obs["spin"],
        S_final_write=S_write,
        S_read_start=S_read,
        eta_w=float(eta_w),
        eta_r=float(eta_r),
        eta_tot=float(eta_tot),
        n_eff=mdl.n_eff,
        C=drive.C,
        grid=mdl.grid if isinstance(mdl, ShellModel) else None,
        diagnostics=diagnostics,
    )


def radial_excitation_density(S_final_write, grid: ShellGrid):
    """Per-ion spin excitation |S_j|^2 / n_j after writing.

    Returns ``(radii, density)`` restricted to shells with n_j > 0.
    """
    S = np.asarray(S_final_write)
    if S.shape != (grid.n_shells,):
        raise ValueError(f"expected {grid.n_shells} shell amplitudes, got shape {S.shape}")
    keep = grid.populations > 0
    return grid.radii[keep], np.abs(S[keep]) ** 2 / grid.populations[keep]


__all__ = [
    "CollectiveModel",
    "CollectiveState",
    "ShellModel",
    "ShellState",
    "SimulationConfig",
    "SimulationResult",
    "build_model",
    "collective_rhs",
    "output_field",
    "radial_excitation_density",
    "run_sequence",
    "shell_rhs",
]

# keep warnings from repeated sweep points from flooding the log
warnings.filterwarnings("once", message=r"2\*T\*C\*gamma", category=RuntimeWarning)
