"""Crystal geometry, transverse cavity modes and collective coupling figures.

Everything here is in SI units with rates as angular frequencies (rad/s).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

#: Default number of shells per smallest transverse length scale.
SHELLS_PER_SCALE = 40
MAX_SHELLS = 2000


@dataclass(frozen=True)
class SystemRates:
    """Coupling and decay rates, all in rad/s."""

    g: float
    kappa: float
    gamma: float
    gamma0: float = 0.0

    def __post_init__(self):
        for name in ("g", "kappa", "gamma", "gamma0"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be a finite rate >= 0, got {value!r}")

    @classmethod
    def from_mhz(cls, g, kappa, gamma, gamma0=0.0) -> "SystemRates":
        """Build from rates quoted as ω/2π in MHz."""
        return cls(*(TWO_PI * 1e6 * x for x in (g, kappa, gamma, gamma0)))

    @classmethod
    def reference(cls) -> "SystemRates":
        return cls.from_mhz(0.37, 1.5, 11.3)


@dataclass(frozen=True)
class CrystalGeometry:
    """Uniform-density cylinder: ``rho`` in m^-3, ``length`` and ``radius`` in m."""

    rho: float
    length: float
    radius: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be > 0, got {self.rho!r}")
        if not self.length > 0:
            raise ValueError(f"length must be > 0, got {self.length!r}")
        if not self.radius >= 0:
            raise ValueError(f"radius must be >= 0, got {self.radius!r}")

    @property
    def areal_density(self) -> float:
        """Ions per unit cross-sectional area (rho * L)."""
        return self.rho * self.length

    @property
    def total_ions(self) -> float:
        return self.areal_density * math.pi * self.radius**2


class ModeKind(str, enum.Enum):
    TEM00 = "TEM00"
    LG01 = "LG01"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class ModeProfile:
    """Cylindrically symmetric transverse amplitude profile.

    ``waist`` is the 1/e amplitude radius in metres and is ignored for
    :attr:`ModeKind.UNIFORM`, which stands for an infinitely wide beam.
    """

    kind: ModeKind
    waist: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "kind", ModeKind(self.kind))
        if self.kind is not ModeKind.UNIFORM and not (0 < self.waist < math.inf):
            raise ValueError(f"{self.kind.value} mode needs a finite waist > 0, got {self.waist!r}")

    @classmethod
    def tem00(cls, waist: float) -> "ModeProfile":
        return cls(ModeKind.TEM00, waist)

    @classmethod
    def lg01(cls, waist: float) -> "ModeProfile":
        return cls(ModeKind.LG01, waist)

    @classmethod
    def uniform(cls) -> "ModeProfile":
        return cls(ModeKind.UNIFORM)

    @property
    def is_uniform(self) -> bool:
        return self.kind is ModeKind.UNIFORM

    @property
    def length_scale(self) -> float:
        """Transverse scale the shell grid must resolve (inf for uniform)."""
        return math.inf if self.is_uniform else self.waist

    def __call__(self, r):
        return mode_amplitude(self, r)


def mode_amplitude(mode: ModeProfile, r):
    """Evaluate the transverse amplitude of ``mode`` at radius ``r`` (m).

    Accepts scalars or arrays; negative radii raise ``ValueError``.

    >>> mode_amplitude(ModeProfile.tem00(1.0), 0.0)
    1.0
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0) or np.any(np.isnan(r_arr)):
        raise ValueError("radius must be >= 0")
    if mode.kind is ModeKind.UNIFORM:
        out = np.ones_like(r_arr)
    else:
        x = r_arr / mode.waist
        gauss = np.exp(-x * x)
        out = gauss if mode.kind is ModeKind.TEM00 else math.sqrt(2.0) * x * gauss
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ShellGrid:
    """Radial slicing of the crystal into ``n_shells`` annuli of equal thickness.

    ``radii`` are shell mid-radii and ``populations`` the (real-valued,
    mean-field) number of ions in each shell.
    """

    n_shells: int
    thickness: float
    radii: np.ndarray = field(repr=False)
    populations: np.ndarray = field(repr=False)

    def __post_init__(self):
        for arr in (self.radii, self.populations):
            arr.setflags(write=False)

    @property
    def total_ions(self) -> float:
        return float(self.populations.sum())

    @property
    def outer_radius(self) -> float:
        return self.n_shells * self.thickness


def build_shell_grid(geom: CrystalGeometry, n_shells: int) -> ShellGrid:
    """Slice ``geom`` into ``n_shells`` cylindrical shells of thickness R/n."""
    if int(n_shells) != n_shells or n_shells < 1:
        raise ValueError(f"n_shells must be a positive integer, got {n_shells!r}")
    n_shells = int(n_shells)
    d = geom.radius / n_shells
    j = np.arange(1, n_shells + 1, dtype=float)
    radii = d * (j - 0.5)
    populations = geom.areal_density * math.pi * d * d * (2.0 * j - 1.0)
    return ShellGrid(n_shells, d, radii, populations)


def default_n_shells(radius: float, *modes: ModeProfile) -> int:
    """Shell count giving d = min(waists, R) / 40, capped at 2000."""
    scale = min([radius] + [m.length_scale for m in modes])
    if radius == 0 or scale == 0:
        return 1
    n = math.ceil(SHELLS_PER_SCALE * radius / scale - 1e-9)
    return int(min(max(n, 1), MAX_SHELLS))


def effective_atom_number(grid: ShellGrid, probe: ModeProfile) -> float:
    """Probe-overlap-weighted ion number, sum_j n_j Psi_p(r_j)^2."""
    return float(np.dot(grid.populations, mode_amplitude(probe, grid.radii) ** 2))


def effective_atom_number_exact(geom: CrystalGeometry, probe: ModeProfile) -> float:
    """Continuum limit of :func:`effective_atom_number` for a uniform cylinder.

    Closed-form Gaussian integrals over the disc of radius R.
    """
    sigma = geom.areal_density
    if probe.is_uniform:
        return geom.total_ions
    w2 = probe.waist**2
    u = 2.0 * geom.radius**2 / w2
    saturation = sigma * math.pi * w2 / 2.0
    if probe.kind is ModeKind.TEM00:
        return saturation * -math.expm1(-u)
    return saturation * (1.0 - math.exp(-u) * (1.0 + u))


def cooperativity(rates: SystemRates, n_eff: float) -> float:
    """C = g^2 N / (2 kappa gamma)."""
    if rates.kappa <= 0 or rates.gamma <= 0:
        raise ValueError("cooperativity needs kappa > 0 and gamma > 0")
    if n_eff < 0:
        raise ValueError(f"effective atom number must be >= 0, got {n_eff!r}")
    return rates.g**2 * n_eff / (2.0 * rates.kappa * rates.gamma)


def analytic_optimal_efficiency(C: float) -> float:
    """Optimal write-store-read efficiency (2C / (1 + 2C))^2 for an extended control."""
    if C < 0:
        raise ValueError(f"cooperativity must be >= 0, got {C!r}")
    single = 2.0 * C / (1.0 + 2.0 * C)
    return single * single
