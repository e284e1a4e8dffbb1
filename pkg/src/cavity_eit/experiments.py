"""Control-amplitude optimisation and crystal-dimension sweeps."""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .core import ModeProfile, build_shell_grid, cooperativity, effective_atom_number
from .dynamics import SimulationConfig, SimulationResult, run_sequence

log = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_A_BOUNDS = (0.2, 8.0)
DEFAULT_TOL_A = 0.02
#: Default radius grid for the radius sweeps, in units of the probe waist.
DEFAULT_RADIUS_RATIOS = tuple(round(0.1 * k, 1) for k in range(1, 31))


class BoundaryWarning(UserWarning):
    """The amplitude optimum sits on the edge of the search bracket."""


@dataclass
class AmplitudeOptimum:
    A_opt: float
    eta_opt: float
    result: SimulationResult
    n_evaluations: int
    at_bound: bool


def golden_section_max(f, lo: float, hi: float, tol: float):
    """Maximise a unimodal ``f`` on [lo, hi] by golden-section search.

    Returns ``(x_best, f_best, history)`` where ``x_best`` lies in a final
    bracket of width <= ``tol`` and ``history`` lists every ``(x, f(x))``.
    """
    if not 0 < tol:
        raise ValueError("tol must be > 0")
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    history = []

    def evaluate(x):
        y = f(x)
        history.append((x, y))
        return y

    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = evaluate(c), evaluate(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = evaluate(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = evaluate(d)
    x_best, f_best = max(history, key=lambda p: p[1])
    return x_best, f_best, history


def optimize_amplitude(config: SimulationConfig, A_bounds=DEFAULT_A_BOUNDS,
                       tol_A: float = DEFAULT_TOL_A) -> AmplitudeOptimum:
    """Find the common write/read amplitude A maximising the total efficiency."""
    A_lo, A_hi = A_bounds
    if not 0 < A_lo < A_hi:
        raise ValueError(f"A_bounds must satisfy 0 < A_lo < A_hi, got {A_bounds!r}")
    results = {}

    def eta(A):
        res = run_sequence(config.with_amplitude(A))
        results[A] = res
        return res.eta_tot

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        A_opt, eta_opt, history = golden_section_max(eta, A_lo, A_hi, tol_A)
    at_bound = A_opt - A_lo <= tol_A or A_hi - A_opt <= tol_A
    if at_bound:
        warnings.warn(f"amplitude optimum A = {A_opt:.4g} is at the bracket edge {A_bounds}",
                      BoundaryWarning, stacklevel=2)
    return AmplitudeOptimum(A_opt, eta_opt, results[A_opt], len(history), at_bound)


@dataclass
class SweepRow:
    mode: str
    config: str
    L_mm: float
    R_um: float
    n_shells: int
    N_eff: float
    C: float
    A_opt: float
    eta_w: float
    eta_r: float
    eta_tot: float
    status: str = "ok"

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]

    def as_dict(self):
        return asdict(self)

    @property
    def key(self):
        return (self.mode, self.config, self.L_mm, self.R_um)


def configuration_kind(config: SimulationConfig) -> str:
    return "extended" if config.control.is_uniform else "finite"


def _sweep_point(task):
    config, optimize, A_bounds, tol_A = task
    geom = config.geometry
    n_shells = config.resolved_n_shells
    grid = build_shell_grid(geom, n_shells)
    n_eff = effective_atom_number(grid, config.probe)
    row = SweepRow(
        mode=config.probe.kind.value,
        config=configuration_kind(config),
        L_mm=geom.length * 1e3,
        R_um=geom.radius * 1e6,
        n_shells=n_shells,
        N_eff=n_eff,
        C=cooperativity(config.rates, n_eff),
        A_opt=math.nan,
        eta_w=math.nan,
        eta_r=math.nan,
        eta_tot=math.nan,
    )
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            warnings.simplefilter("ignore", BoundaryWarning)
            if optimize:
                opt = optimize_amplitude(config, A_bounds, tol_A)
                res, A = opt.result, opt.A_opt
                if opt.at_bound:
                    row.status = "bound"
            else:
                res, A = run_sequence(config), config.schedule.A_w
    except Exception as exc:  # recorded in-row so the sweep carries on
        log.warning("sweep point L=%g mm R=%g um failed: %s", row.L_mm, row.R_um, exc)
        row.status = f"error: {type(exc).__name__}: {exc}".replace("\n", " ")
        return row
    row.A_opt = A
    row.eta_w, row.eta_r, row.eta_tot = res.eta_w, res.eta_r, res.eta_tot
    return row


def _run_tasks(tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [_sweep_point(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves input order regardless of completion order
        return list(pool.map(_sweep_point, tasks))


def sweep_radius(config: SimulationConfig, R_values, optimize: bool = True,
                 A_bounds=DEFAULT_A_BOUNDS, tol_A: float = DEFAULT_TOL_A,
                 workers: int = 1) -> list[SweepRow]:
    """One row per crystal radius (m), each with its own amplitude optimisation."""
    R_values = [float(R) for R in R_values]
    if not R_values:
        raise ValueError("R_values must be nonempty")
    if any(R <= 0 for R in R_values) or R_values != sorted(R_values):
        raise ValueError("R_values must be positive and sorted")
    tasks = [(config.with_radius(R), optimize, A_bounds, tol_A) for R in R_values]
    return _run_tasks(tasks, workers)


def sweep_dimensions(config: SimulationConfig, L_values, R_values, optimize: bool = True,
                     A_bounds=DEFAULT_A_BOUNDS, tol_A: float = DEFAULT_TOL_A,
                     workers: int = 1) -> list[SweepRow]:
    """Cartesian L x R sweep (metres); rows ordered L-major."""
    L_values = [float(L) for L in L_values]
    R_values = [float(R) for R in R_values]
    if not L_values or not R_values:
        raise ValueError("L_values and R_values must be nonempty")
    tasks = []
    for L in L_values:
        cfg = config.replace(geometry=replace(config.geometry, length=L))
        tasks.extend((cfg.with_radius(R), optimize, A_bounds, tol_A) for R in R_values)
    return _run_tasks(tasks, workers)


def rows_to_grid(rows: list[SweepRow], field_name: str = "eta_tot"):
    """Reshape L-major sweep rows into ``(L_mm, R_um, values[L, R])``."""
    L = sorted({r.L_mm for r in rows})
    R = sorted({r.R_um for r in rows})
    values = np.full((len(L), len(R)), np.nan)
    for r in rows:
        values[L.index(r.L_mm), R.index(r.R_um)] = getattr(r, field_name)
    return np.array(L), np.array(R), values


def mode_variants(config: SimulationConfig):
    """The four (probe mode, control kind) combinations compared for TEM00 and LG01."""
    w = config.probe.waist
    out = {}
    for probe in (ModeProfile.tem00(w), ModeProfile.lg01(w)):
        for kind, control in (("extended", ModeProfile.uniform()), ("finite", probe)):
            out[(probe.kind.value, kind)] = config.replace(probe=probe, control=control)
    return out


def compare_modes(config: SimulationConfig, R_values, optimize: bool = True,
                  A_bounds=DEFAULT_A_BOUNDS, tol_A: float = DEFAULT_TOL_A,
                  workers: int = 1) -> dict:
    """Radius sweeps for TEM00/LG01 probes with extended and mode-matched controls."""
    R_values = [float(R) for R in R_values]
    variants = mode_variants(config)
    tasks, keys = [], []
    for key, cfg in variants.items():
        for R in R_values:
            tasks.append((cfg.with_radius(R), optimize, A_bounds, tol_A))
            keys.append(key)
    rows = _run_tasks(tasks, workers)
    tables = {key: [] for key in variants}
    for key, row in zip(keys, rows):
        tables[key].append(row)
    return tables


def peak_row(rows: list[SweepRow]) -> SweepRow:
    ok = [r for r in rows if not math.isnan(r.eta_tot)]
    return max(ok, key=lambda r: r.eta_tot)


def refine_peak(rows: list[SweepRow]) -> float:
    """Radius (um) of the efficiency maximum from a parabola through the top three points."""
    ok = [r for r in rows if not math.isnan(r.eta_tot)]
    i = max(range(len(ok)), key=lambda k: ok[k].eta_tot)
    if i == 0 or i == len(ok) - 1:
        return ok[i].R_um
    x = np.array([ok[k].R_um for k in (i - 1, i, i + 1)])
    y = np.array([ok[k].eta_tot for k in (i - 1, i, i + 1)])
    c2, c1, _ = np.polyfit(x, y, 2)
    return float(-c1 / (2 * c2)) if c2 < 0 else float(x[1])


@dataclass
class InvarianceReport:
    A_opt: float
    eta_baseline: float
    amplitude_grid: list
    max_amplitude_improvement: float
    duration_etas: dict
    max_duration_change: float
    storage_change: float

    def as_dict(self):
        return asdict(self)


def invariance_checks(config: SimulationConfig, A_opt: float | None = None,
                      A_step: float = 0.05, durations=(1e-6, 3e-6)) -> InvarianceReport:
    """Check that unequal write/read amplitudes, other pulse durations or a
    longer store window do not improve on the optimised sequence.

    ``A_step`` is the relative spacing of the 3 x 3 (A_w, A_r) grid around
    (A_opt, A_opt).  Durations are swept at fixed cooperativity.
    """
    if A_opt is None:
        A_opt = optimize_amplitude(config).A_opt
    base_cfg = config.with_amplitude(A_opt)
    base = run_sequence(base_cfg).eta_tot

    grid = []
    for fw in (1 - A_step, 1.0, 1 + A_step):
        for fr in (1 - A_step, 1.0, 1 + A_step):
            if fw == fr == 1.0:
                continue
            eta = run_sequence(config.with_amplitude(A_opt * fw, A_opt * fr)).eta_tot
            grid.append((A_opt * fw, A_opt * fr, eta))
    improvement = max(0.0, max(e for *_, e in grid) - base)

    sched = base_cfg.schedule
    duration_etas = {}
    for T in durations:
        new = type(sched).default(T=T, A=sched.A_w, A_r=sched.A_r)
        duration_etas[T] = run_sequence(base_cfg.replace(schedule=new)).eta_tot
    max_dT = max(abs(e - base) for e in duration_etas.values())

    doubled = base_cfg.replace(schedule=sched.with_storage(2 * sched.T_s))
    storage_change = abs(run_sequence(doubled).eta_tot - base)

    return InvarianceReport(A_opt, base, grid, improvement, duration_etas, max_dT, storage_change)
