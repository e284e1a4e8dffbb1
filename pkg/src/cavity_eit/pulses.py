"""Probe input pulse and the impedance-matched write/read control pulses."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

#: Adiabaticity figure 2 T C gamma below which a warning is raised.
ADIABATIC_THRESHOLD = 100.0


@dataclass(frozen=True)
class PulseSchedule:
    """Timing of a write-store-read sequence (all times in seconds).

    The probe pulse is centred on t = 0.  The write control is gated off
    after ``T_w``, the read control is gated on at ``T_r`` and peaks
    around ``T_r + T_s``.
    """

    T: float
    A_w: float = 1.0
    A_r: float = 1.0
    t_start: float = -10e-6
    T_w: float = 10e-6
    T_r: float = 20e-6
    t_end: float = 40e-6

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"pulse duration T must be > 0, got {self.T!r}")
        if not (self.A_w > 0 and self.A_r > 0):
            raise ValueError("control amplitudes A_w, A_r must be > 0")
        if not (self.t_start < self.T_w < self.T_r < self.t_end):
            raise ValueError(
                "schedule must satisfy t_start < T_w < T_r < t_end, got "
                f"{self.t_start!r}, {self.T_w!r}, {self.T_r!r}, {self.t_end!r}"
            )

    @property
    def T_s(self) -> float:
        """Storage duration T_r - T_w."""
        return self.T_r - self.T_w

    @classmethod
    def default(cls, T: float = 2e-6, A: float = 1.0, A_r: float | None = None,
                store: float | None = None, margin: float = 5.0) -> "PulseSchedule":
        """Standard sequence for a probe of duration ``T``.

        The write window ends ``margin * T`` after the pulse centre and the
        store gap defaults to ``margin * T`` as well, so the read control is
        already down to exp(-2 margin) of its plateau when it is switched on.
        The run ends ``margin * T`` after the read pulse turns on fully.
        """
        T_s = margin * T if store is None else store
        T_w = margin * T
        T_r = T_w + T_s
        return cls(T=T, A_w=A, A_r=A if A_r is None else A_r,
                   t_start=-margin * T, T_w=T_w, T_r=T_r, t_end=T_r + T_s + margin * T)

    def with_amplitudes(self, A_w: float, A_r: float | None = None) -> "PulseSchedule":
        return replace(self, A_w=A_w, A_r=A_w if A_r is None else A_r)

    def with_storage(self, T_s: float) -> "PulseSchedule":
        """Same write/read shapes with the store gap set to ``T_s``."""
        shift = T_s - self.T_s
        tail = self.t_end - (self.T_r + self.T_s)
        T_r = self.T_w + T_s
        return replace(self, T_r=T_r, t_end=T_r + T_s + tail) if shift else self


def probe_input(t, T: float):
    """Hyperbolic-secant probe envelope a_in(t) = sech(2t/T)/sqrt(T), unit energy."""
    if not T > 0:
        raise ValueError(f"T must be > 0, got {T!r}")
    t = np.asarray(t, dtype=float)
    # cosh overflows past |x| ~ 710; the envelope is zero to double precision long before
    x = np.minimum(np.abs(2.0 * t / T), 700.0)
    out = 1.0 / (math.sqrt(T) * np.cosh(x))
    return float(out) if out.ndim == 0 else out


def write_plateau(gamma: float, C: float, T: float, A: float = 1.0) -> float:
    """Early-time (t -> -inf) Rabi frequency of the write pulse."""
    return A * math.sqrt(2.0 * gamma * (1.0 + 2.0 * C) / T)


def _write_shape(t, T):
    # (1 + exp(4t/T))^(-1/2) evaluated without overflow
    x = 4.0 * np.asarray(t, dtype=float) / T
    return np.exp(-0.5 * np.logaddexp(0.0, x))


def control_write(t, sched: PulseSchedule, gamma: float, C: float):
    """Write control Rabi frequency (rad/s), zero after ``sched.T_w``."""
    t_arr = np.asarray(t, dtype=float)
    omega = write_plateau(gamma, C, sched.T, sched.A_w) * _write_shape(t_arr, sched.T)
    omega = np.where(t_arr > sched.T_w, 0.0, omega)
    return float(omega) if omega.ndim == 0 else omega


def control_read(t, sched: PulseSchedule, gamma: float, C: float):
    """Read control Rabi frequency (rad/s), the time-reverse of the write pulse.

    Omega_r(t) = Omega_w(T_r + T_s - t) with amplitude ``A_r``; zero before ``T_r``.
    """
    t_arr = np.asarray(t, dtype=float)
    mirrored = sched.T_r + sched.T_s - t_arr
    omega = write_plateau(gamma, C, sched.T, sched.A_r) * _write_shape(mirrored, sched.T)
    omega = np.where(t_arr < sched.T_r, 0.0, omega)
    return float(omega) if omega.ndim == 0 else omega


def control_envelope(t, sched: PulseSchedule, gamma: float, C: float):
    """Full control sequence: write pulse, dark store window, read pulse."""
    t_arr = np.asarray(t, dtype=float)
    omega = np.where(
        t_arr <= sched.T_w,
        control_write(t_arr, sched, gamma, C),
        np.where(t_arr >= sched.T_r, control_read(t_arr, sched, gamma, C), 0.0),
    )
    return float(omega) if omega.ndim == 0 else omega


def adiabaticity(T: float, C: float, gamma: float) -> float:
    """The figure 2 T C gamma; the optimal pulses assume it is >> 1."""
    return 2.0 * T * C * gamma


def check_adiabatic(T: float, C: float, gamma: float, threshold: float = ADIABATIC_THRESHOLD) -> float:
    value = adiabaticity(T, C, gamma)
    if value < threshold:
        warnings.warn(
            f"2*T*C*gamma = {value:.3g} < {threshold:g}: optimal control pulses are outside "
            "the adiabatic regime", RuntimeWarning, stacklevel=2,
        )
    return value
