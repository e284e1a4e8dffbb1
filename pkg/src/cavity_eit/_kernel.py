"""Compiled write-store-read integration of the shell equations.

Same Dormand-Prince 5(4) scheme, step controller and dense output as
:func:`cavity_eit.integrate.integrate`, specialised to the shell model with
its three energy accumulators so that a whole sequence runs without
returning to Python.  The generic integrator remains the reference path.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .integrate import _A, _C, _D, _E, MAX_FACTOR, MIN_FACTOR, SAFETY

_A_MAT = np.zeros((7, 7))
for _s, _row in enumerate(_A):
    _A_MAT[_s, :len(_row)] = _row

STATUS_OK = 0
STATUS_UNDERFLOW = 1


@njit(cache=True)
def _omega(t, drive):
    T, W_w, W_r, T_w, T_r, epoch = drive[1], drive[2], drive[3], drive[4], drive[5], drive[6]
    if t <= T_w:
        x = 4.0 * t / T
        W = W_w
    elif t >= T_r:
        x = 4.0 * (epoch - t) / T
        W = W_r
    else:
        return 0.0
    if x > 0:
        return W * math.exp(-0.5 * x) / math.sqrt(1.0 + math.exp(-x))
    return W / math.sqrt(1.0 + math.exp(x))


@njit(cache=True)
def _a_in(t, drive):
    x = abs(2.0 * t / drive[1])
    if x > 700.0:
        return 0.0
    return drive[0] / math.cosh(x)


@njit(cache=True)
def _rhs(t, y, out, coupling, psi_c, rates, drive, scale):
    n = coupling.size
    dim = 2 * n + 1
    kappa, gamma, gamma0, sqrt2k = rates[0], rates[1], rates[2], rates[3]
    om = _omega(t, drive)
    ain = scale * _a_in(t, drive)
    a = y[0]
    acc = 0j
    loss = 0.0
    for j in range(n):
        P = y[1 + j]
        S = y[1 + n + j]
        c = coupling[j]
        acc += c * P
        oc = 1j * om * psi_c[j]
        out[1 + j] = -gamma * P + 1j * c * a + oc * S
        out[1 + n + j] = -gamma0 * S + oc * P
        loss += 2.0 * gamma * (P.real * P.real + P.imag * P.imag)
        loss += 2.0 * gamma0 * (S.real * S.real + S.imag * S.imag)
    out[0] = -kappa * a + 1j * acc + sqrt2k * ain
    a_out = sqrt2k * a - ain
    out[dim] = ain.real * ain.real + ain.imag * ain.imag
    out[dim + 1] = a_out.real * a_out.real + a_out.imag * a_out.imag
    out[dim + 2] = loss


@njit(cache=True)
def _rms_scaled(v, y0, y1, rtol, atol):
    s = 0.0
    for i in range(v.size):
        sc = atol + rtol * max(abs(y0[i]), abs(y1[i]))
        r = abs(v[i]) / sc
        s += r * r
    return math.sqrt(s / v.size)


@njit(cache=True)
def _observe(y, n, k, a_obs, opt_obs, spin_obs, ledger_obs):
    dim = 2 * n + 1
    a_obs[k] = y[0]
    o = 0.0
    s = 0.0
    for j in range(n):
        P = y[1 + j]
        S = y[1 + n + j]
        o += P.real * P.real + P.imag * P.imag
        s += S.real * S.real + S.imag * S.imag
    opt_obs[k] = o
    spin_obs[k] = s
    for m in range(3):
        ledger_obs[k, m] = y[dim + m].real


@njit(cache=True)
def run_shells(coupling, psi_c, rates, drive, scale, bounds, times, phase_end, rtol, atol):
    """Integrate all phases; returns observations, phase-end snapshots and stats.

    ``times`` is the concatenated reporting grid and ``phase_end[p]`` the index
    one past the last reporting time belonging to phase ``p``.
    """
    n = coupling.size
    dim = 2 * n + 1
    size = dim + 3
    nt = times.size
    a_obs = np.zeros(nt, np.complex128)
    opt_obs = np.zeros(nt)
    spin_obs = np.zeros(nt)
    ledger_obs = np.zeros((nt, 3))
    snapshots = np.zeros((3, size), np.complex128)
    stats = np.zeros(5)  # steps, rejected, fev, error sum, failure time

    y = np.zeros(size, np.complex128)
    K = np.zeros((7, size), np.complex128)
    y_stage = np.zeros(size, np.complex128)
    err_vec = np.zeros(size, np.complex128)
    y_int = np.zeros(size, np.complex128)

    i_eval = 0
    while i_eval < nt and times[i_eval] == bounds[0]:
        _observe(y, n, i_eval, a_obs, opt_obs, spin_obs, ledger_obs)
        i_eval += 1

    for p in range(3):
        t0 = bounds[p]
        t1 = bounds[p + 1]
        stop = phase_end[p]
        t = t0
        _rhs(t, y, K[0], coupling, psi_c, rates, drive, scale)
        stats[2] += 1
        # initial step, as in the generic integrator
        d0 = 0.0
        d1 = 0.0
        for i in range(size):
            sc = atol + rtol * abs(y[i])
            d0 += (abs(y[i]) / sc) ** 2
            d1 += (abs(K[0, i]) / sc) ** 2
        d0 = math.sqrt(d0 / size)
        d1 = math.sqrt(d1 / size)
        span = t1 - t0
        if d0 < 1e-5 or d1 < 1e-5:
            h0 = 1e-6 * span
        else:
            h0 = 0.01 * d0 / d1
        for i in range(size):
            y_stage[i] = y[i] + h0 * K[0, i]
        _rhs(t0 + h0, y_stage, K[1], coupling, psi_c, rates, drive, scale)
        stats[2] += 1
        d2 = 0.0
        for i in range(size):
            sc = atol + rtol * abs(y[i])
            d2 += (abs(K[1, i] - K[0, i]) / sc) ** 2
        d2 = math.sqrt(d2 / size) / h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6 * span, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** 0.2
        h = min(100 * h0, h1, span)

        while t < t1:
            h_min = 16 * np.spacing(max(abs(t), abs(t1)))
            if h < h_min:
                stats[4] = t
                return a_obs, opt_obs, spin_obs, ledger_obs, snapshots, stats, STATUS_UNDERFLOW
            last = t + h >= t1
            if last:
                h = t1 - t
            for s in range(1, 7):
                for i in range(size):
                    acc = 0j
                    for m in range(s):
                        acc += _A_MAT[s, m] * K[m, i]
                    y_stage[i] = y[i] + h * acc
                _rhs(t + _C[s] * h, y_stage, K[s], coupling, psi_c, rates, drive, scale)
            stats[2] += 6
            err = 0.0
            for i in range(size):
                e = h * (_E[0] * K[0, i] + _E[2] * K[2, i] + _E[3] * K[3, i]
                         + _E[4] * K[4, i] + _E[5] * K[5, i] + _E[6] * K[6, i])
                err_vec[i] = e
            err = _rms_scaled(err_vec, y, y_stage, rtol, atol)

            if err <= 1.0:
                t_new = t1 if last else t + h
                while i_eval < stop and times[i_eval] <= t_new:
                    th = (times[i_eval] - t) / h
                    th1 = 1.0 - th
                    for i in range(size):
                        ydiff = y_stage[i] - y[i]
                        bspl = h * K[0, i] - ydiff
                        r4 = ydiff - h * K[6, i] - bspl
                        r5 = h * (_D[0] * K[0, i] + _D[2] * K[2, i] + _D[3] * K[3, i]
                                  + _D[4] * K[4, i] + _D[5] * K[5, i] + _D[6] * K[6, i])
                        y_int[i] = y[i] + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5)))
                    _observe(y_int, n, i_eval, a_obs, opt_obs, spin_obs, ledger_obs)
                    i_eval += 1
                emax = 0.0
                for i in range(size):
                    emax = max(emax, abs(err_vec[i]))
                stats[3] += emax
                t = t_new
                for i in range(size):
                    y[i] = y_stage[i]
                    K[0, i] = K[6, i]
                stats[0] += 1
                if err == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = min(MAX_FACTOR, SAFETY * err ** -0.2)
                h = h * factor
            else:
                stats[1] += 1
                h *= max(MIN_FACTOR, SAFETY * err ** -0.2)
        for i in range(size):
            snapshots[p, i] = y[i]
    return a_obs, opt_obs, spin_obs, ledger_obs, snapshots, stats, STATUS_OK
