"""Adaptive Dormand-Prince 5(4) integrator with dense output.

Works directly on complex state vectors.  Instead of storing the full
state at every reporting time, callers may pass an ``observe`` function
that reduces a block of interpolated states to the few quantities they
actually need; this keeps memory flat for large shell grids.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

# Butcher tableau (Dormand & Prince 1980)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
# 5th-order weights minus embedded 4th-order weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# continuous extension (Hairer, Norsett & Wanner, dopri5 contd5)
_D = np.array([
    -12715105075 / 11282082432, 0.0, 87487479700 / 32700410799,
    -10690763975 / 1880347072, 701980252875 / 199316789632,
    -1453857185 / 822651844, 69997945 / 29380423,
])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0


class IntegrationError(RuntimeError):
    """Raised when the step size collapses; ``t`` is where it happened."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} at t = {t:.6e}")
        self.t = t


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray | dict
    y_final: np.ndarray
    n_steps: int
    n_rejected: int
    n_fev: int
    # sum of the local error estimates of accepted steps (max-norm, state units)
    error_estimate: float


def _rms(x):
    return np.sqrt(np.mean(np.abs(x) ** 2)) if x.size else 0.0


def _initial_step(rhs, t0, y0, f0, span, rtol, atol):
    # Hairer & Wanner, Solving ODEs I, II.4, with fallbacks relative to the span
    scale = atol + rtol * np.abs(y0)
    d0, d1 = _rms(y0 / scale), _rms(f0 / scale)
    h0 = 1e-6 * span if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = rhs(t0 + h0, y1)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6 * span, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t_span: tuple[float, float],
    t_eval=None,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    observe: Callable[[np.ndarray], dict] | None = None,
    first_step: float | None = None,
    max_step: float = np.inf,
) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` over ``t_span``.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, y)`` returning an array shaped like ``y``.
    y0 : array_like
        Initial state; real or complex.
    t_span : (t0, t1)
        Integration interval, ``t0 < t1``.
    t_eval : array_like, optional
        Sorted reporting times inside ``t_span``.  Values are produced from
        the dense-output interpolant, not by forcing steps onto them.
    rtol, atol : float
        Relative tolerance in [1e-12, 1e-4] and absolute tolerance > 0.
    observe : callable, optional
        Maps an interpolated block of states, shape ``(k, n)``, to a dict of
        arrays with leading length ``k``.  When given, ``Trajectory.y`` is a
        dict of the concatenated observations instead of the raw states.

    Raises
    ------
    IntegrationError
        If the step size underflows.
    """
    t0, t1 = map(float, t_span)
    if not t1 > t0:
        raise ValueError(f"t_span must be increasing, got {t_span!r}")
    if not 1e-12 <= rtol <= 1e-4:
        raise ValueError(f"rtol must lie in [1e-12, 1e-4], got {rtol!r}")
    if not atol > 0:
        raise ValueError(f"atol must be > 0, got {atol!r}")

    y = np.array(y0, dtype=complex if np.iscomplexobj(y0) else float)
    t_eval = np.empty(0) if t_eval is None else np.asarray(t_eval, dtype=float)
    if t_eval.size and (t_eval[0] < t0 or t_eval[-1] > t1 or np.any(np.diff(t_eval) < 0)):
        raise ValueError("t_eval must be sorted and lie within t_span")

    chunks = []
    i_eval = 0
    n_eval = t_eval.size

    def emit(block):
        chunks.append(observe(block) if observe is not None else block)

    # points sitting exactly at t0
    while i_eval < n_eval and t_eval[i_eval] == t0:
        emit(y[None, :].copy())
        i_eval += 1

    k = [None] * 7
    k[0] = rhs(t0, y)
    n_fev = 1
    if first_step is None:
        h = _initial_step(rhs, t0, y, k[0], t1 - t0, rtol, atol)
        n_fev += 1
    else:
        h = first_step
    h = min(h, max_step, t1 - t0)

    t = t0
    n_steps = n_rejected = 0
    err_sum = 0.0
    while t < t1:
        h_min = 16 * np.spacing(max(abs(t), abs(t1)))
        if h < h_min:
            raise IntegrationError("step size underflow", t)
        last = t + h >= t1
        if last:
            h = t1 - t
        for s in range(1, 7):
            dy = _A[s][0] * k[0]
            for m in range(1, s):
                if _A[s][m]:
                    dy = dy + _A[s][m] * k[m]
            y_stage = y + h * dy
            k[s] = rhs(t + _C[s] * h, y_stage)
        n_fev += 6
        y_new = y_stage  # row 7 of the tableau is the 5th-order solution (FSAL)

        err_vec = h * (_E[0] * k[0] + _E[2] * k[2] + _E[3] * k[3]
                       + _E[4] * k[4] + _E[5] * k[5] + _E[6] * k[6])
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms(err_vec / scale)

        if err <= 1.0:
            t_new = t1 if last else t + h
            if i_eval < n_eval and t_eval[i_eval] <= t_new:
                j = i_eval
                while j < n_eval and t_eval[j] <= t_new:
                    j += 1
                theta = (t_eval[i_eval:j] - t) / h
                emit(_dense(y, y_new, k, h, theta))
                i_eval = j
            err_sum += float(np.max(np.abs(err_vec))) if err_vec.size else 0.0
            t, y = t_new, y_new
            k[0] = k[6]
            n_steps += 1
            factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, SAFETY * err ** -0.2)
            h = min(h * factor, max_step)
        else:
            n_rejected += 1
            h *= max(MIN_FACTOR, SAFETY * err ** -0.2)

    if observe is None:
        out = np.concatenate(chunks, axis=0) if chunks else np.empty((0, y.size), dtype=y.dtype)
    elif chunks:
        out = {key: np.concatenate([c[key] for c in chunks]) for key in chunks[0]}
    else:
        out = observe(np.empty((0, y.size), dtype=y.dtype))
    return Trajectory(t_eval, out, y, n_steps, n_rejected, n_fev, err_sum)


def _dense(y0, y1, k, h, theta):
    """Fourth-order interpolant on the step [t, t + h] at fractions ``theta``."""
    ydiff = y1 - y0
    bspl = h * k[0] - ydiff
    r4 = ydiff - h * k[6] - bspl
    r5 = h * (_D[0] * k[0] + _D[2] * k[2] + _D[3] * k[3] + _D[4] * k[4]
              + _D[5] * k[5] + _D[6] * k[6])
    th = theta[:, None]
    th1 = 1.0 - th
    return y0 + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5)))
