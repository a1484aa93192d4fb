"""Compiled inner loops for the pair-rotation search.

The numpy sweep engine spends its time in interpreter overhead on very small
arrays; these numba kernels run the same golden-section pair optimization in
compiled scalar code.  They cover the built-in simplex functions (ids 0, 1, 2
for the entropy, l1 and concurrence forms) over coherence vectors and over
Schmidt spectra with the smaller local dimension at most 3; everything else
falls back to the numpy path.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_INV_LN2 = 1.0 / math.log(2.0)

F_SHANNON = 0
F_L1 = 1
F_CONCURRENCE = 2

KIND_COHERENCE = 0
KIND_ENTANGLEMENT = 1


@njit(cache=True)
def _f_weighted(q, used, p, f_id, eps2):
    """p * f(q / p) for the built-in f; q holds `used` unnormalized entries.

    ``eps2`` > 0 smooths the square-root/logarithm kinks (graduated
    continuation for the minimization direction); 0 gives the exact value.
    """
    if p <= 1e-300:
        return 0.0
    if f_id == F_SHANNON:
        shift = eps2 * p
        acc = 0.0
        total = 0.0
        for i in range(used):
            t = q[i] + shift
            if t > 0.0:
                acc += t * math.log(t)
            total += t
        return (-acc + total * math.log(total)) * _INV_LN2
    if f_id == F_L1:
        shift = eps2 * p
        acc = 0.0
        for i in range(used):
            t = q[i] + shift
            if t > 0.0:
                acc += math.sqrt(t)
        return acc * acc - p * (1.0 + used * eps2)
    acc = 0.0
    for i in range(used):
        acc += q[i] * q[i]
    val = 2.0 * (p * p - acc)
    return math.sqrt(val) if val > 0.0 else 0.0


@njit(cache=True)
def _spectrum(w, q, kind, da, db):
    """Fill ``q`` with the unnormalized spectrum of ``w``; returns (used, p).

    Coherence: squared moduli.  Entanglement: eigenvalues of the Gram matrix
    on the smaller side (closed forms for sizes 1-3).
    """
    n = w.shape[0]
    if kind == KIND_COHERENCE:
        p = 0.0
        for i in range(n):
            v = w[i].real * w[i].real + w[i].imag * w[i].imag
            q[i] = v
            p += v
        return n, p
    k = da if da <= db else db
    g = np.zeros((k, k), dtype=np.complex128)
    if da <= db:
        for a in range(da):
            for b in range(a, da):
                acc = 0.0 + 0.0j
                for j in range(db):
                    acc += w[a * db + j] * np.conj(w[b * db + j])
                g[a, b] = acc
                g[b, a] = np.conj(acc)
    else:
        for a in range(db):
            for b in range(a, db):
                acc = 0.0 + 0.0j
                for i in range(da):
                    acc += np.conj(w[i * db + a]) * w[i * db + b]
                g[a, b] = acc
                g[b, a] = np.conj(acc)
    if k == 1:
        q[0] = g[0, 0].real
        return 1, q[0]
    if k == 2:
        tr = g[0, 0].real + g[1, 1].real
        det = (g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]).real
        disc = tr * tr - 4.0 * det
        root = math.sqrt(disc) if disc > 0.0 else 0.0
        q[0] = 0.5 * (tr + root)
        q[1] = 0.5 * (tr - root)
        if q[1] < 0.0:
            q[1] = 0.0
        return 2, tr
    a00 = g[0, 0].real
    a11 = g[1, 1].real
    a22 = g[2, 2].real
    off = (
        g[0, 1].real * g[0, 1].real + g[0, 1].imag * g[0, 1].imag
        + g[0, 2].real * g[0, 2].real + g[0, 2].imag * g[0, 2].imag
        + g[1, 2].real * g[1, 2].real + g[1, 2].imag * g[1, 2].imag
    )
    tr = a00 + a11 + a22
    qm = tr / 3.0
    p2 = (a00 - qm) ** 2 + (a11 - qm) ** 2 + (a22 - qm) ** 2 + 2.0 * off
    pm = math.sqrt(p2 / 6.0) if p2 > 0.0 else 0.0
    if pm <= 1e-300:
        q[0] = qm
        q[1] = qm
        q[2] = qm
        return 3, tr
    b00 = (a00 - qm) / pm
    b11 = (a11 - qm) / pm
    b22 = (a22 - qm) / pm
    b01 = g[0, 1] / pm
    b02 = g[0, 2] / pm
    b12 = g[1, 2] / pm
    detb = (
        b00 * (b11 * b22 - (b12 * np.conj(b12)).real)
        - (b01 * (np.conj(b01) * b22 - np.conj(b12) * np.conj(b02))).real
        + (b02 * (np.conj(b01) * b12 - b11 * np.conj(b02))).real
    )
    half = detb / 2.0
    if half > 1.0:
        half = 1.0
    elif half < -1.0:
        half = -1.0
    phi = math.acos(half) / 3.0
    hi = qm + 2.0 * pm * math.cos(phi)
    lo = qm + 2.0 * pm * math.cos(phi + 2.0 * math.pi / 3.0)
    mid = tr - hi - lo
    q[0] = hi if hi > 0.0 else 0.0
    q[1] = mid if mid > 0.0 else 0.0
    q[2] = lo if lo > 0.0 else 0.0
    return 3, tr


@njit(cache=True)
def _pair_value(wk, wl, c, s, er, ei, top, bot, q, sign, kind, f_id, da, db, eps2):
    n = wk.shape[0]
    for i in range(n):
        e_wl = complex(er * wl[i].real - ei * wl[i].imag, er * wl[i].imag + ei * wl[i].real)
        top[i] = c * wk[i] + s * e_wl
        ec_wk = complex(er * wk[i].real + ei * wk[i].imag, er * wk[i].imag - ei * wk[i].real)
        bot[i] = c * wl[i] - s * ec_wk
    used, p = _spectrum(top, q, kind, da, db)
    val = _f_weighted(q, used, p, f_id, eps2)
    used, p = _spectrum(bot, q, kind, da, db)
    val += _f_weighted(q, used, p, f_id, eps2)
    return sign * val


@njit(cache=True)
def _gss_theta(wk, wl, er, ei, lo, hi, iters, top, bot, q, sign, kind, f_id, da, db, eps2):
    a = lo
    b = hi
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1 = _pair_value(wk, wl, math.cos(x1), math.sin(x1), er, ei, top, bot, q, sign, kind, f_id, da, db, eps2)
    f2 = _pair_value(wk, wl, math.cos(x2), math.sin(x2), er, ei, top, bot, q, sign, kind, f_id, da, db, eps2)
    for _ in range(iters):
        if f1 < f2:
            b = x2
            x2 = x1
            f2 = f1
            x1 = b - _INVPHI * (b - a)
            f1 = _pair_value(wk, wl, math.cos(x1), math.sin(x1), er, ei, top, bot, q, sign, kind, f_id, da, db, eps2)
        else:
            a = x1
            x1 = x2
            f1 = f2
            x2 = a + _INVPHI * (b - a)
            f2 = _pair_value(wk, wl, math.cos(x2), math.sin(x2), er, ei, top, bot, q, sign, kind, f_id, da, db, eps2)
    if f1 < f2:
        return x1, f1
    return x2, f2


@njit(cache=True)
def _gss_phi(wk, wl, theta, lo, hi, iters, top, bot, q, sign, kind, f_id, da, db, eps2):
    c = math.cos(theta)
    s = math.sin(theta)
    a = lo
    b = hi
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1 = _pair_value(wk, wl, c, s, math.cos(x1), math.sin(x1), top, bot, q, sign, kind, f_id, da, db, eps2)
    f2 = _pair_value(wk, wl, c, s, math.cos(x2), math.sin(x2), top, bot, q, sign, kind, f_id, da, db, eps2)
    for _ in range(iters):
        if f1 < f2:
            b = x2
            x2 = x1
            f2 = f1
            x1 = b - _INVPHI * (b - a)
            f1 = _pair_value(wk, wl, c, s, math.cos(x1), math.sin(x1), top, bot, q, sign, kind, f_id, da, db, eps2)
        else:
            a = x1
            x1 = x2
            f1 = f2
            x2 = a + _INVPHI * (b - a)
            f2 = _pair_value(wk, wl, c, s, math.cos(x2), math.sin(x2), top, bot, q, sign, kind, f_id, da, db, eps2)
    if f1 < f2:
        return x1, f1
    return x2, f2


@njit(cache=True)
def _scan_theta(wk, wl, er, ei, lo, hi, points, iters, top, bot, q, sign, kind, f_id, da, db, eps2):
    step = (hi - lo) / (points - 1)
    best_x = lo
    best_f = _pair_value(wk, wl, math.cos(lo), math.sin(lo), er, ei, top, bot, q, sign, kind, f_id, da, db, eps2)
    for j in range(1, points):
        x = lo + step * j
        f = _pair_value(wk, wl, math.cos(x), math.sin(x), er, ei, top, bot, q, sign, kind, f_id, da, db, eps2)
        if f < best_f:
            best_f = f
            best_x = x
    a = best_x - step
    b = best_x + step
    if a < lo:
        a = lo
    if b > hi:
        b = hi
    x, f = _gss_theta(wk, wl, er, ei, a, b, iters, top, bot, q, sign, kind, f_id, da, db, eps2)
    if f < best_f:
        return x, f
    return best_x, best_f


@njit(cache=True)
def _scan_phi(wk, wl, theta, lo, hi, points, iters, top, bot, q, sign, kind, f_id, da, db, eps2):
    c = math.cos(theta)
    s = math.sin(theta)
    step = (hi - lo) / (points - 1)
    best_x = lo
    best_f = _pair_value(wk, wl, c, s, math.cos(lo), math.sin(lo), top, bot, q, sign, kind, f_id, da, db, eps2)
    for j in range(1, points):
        x = lo + step * j
        f = _pair_value(wk, wl, c, s, math.cos(x), math.sin(x), top, bot, q, sign, kind, f_id, da, db, eps2)
        if f < best_f:
            best_f = f
            best_x = x
    a = best_x - step
    b = best_x + step
    if a < lo:
        a = lo
    if b > hi:
        b = hi
    x, f = _gss_phi(wk, wl, theta, a, b, iters, top, bot, q, sign, kind, f_id, da, db, eps2)
    if f < best_f:
        return x, f
    return best_x, best_f


@njit(cache=True)
def round_pairs(WK, WL, sign, kind, f_id, da, db, coarse_iters, fine_iters, eps2, refine_cycles):
    """Optimize the two-row rotation for a batch of member pairs.

    Returns per-pair ``(value, theta, phi)`` of the best rotation found by
    the eight-point phase grid with golden-section refinement.
    """
    npairs, n = WK.shape
    out_val = np.empty(npairs)
    out_theta = np.empty(npairs)
    out_phi = np.empty(npairs)
    top = np.empty(n, dtype=np.complex128)
    bot = np.empty(n, dtype=np.complex128)
    q = np.empty(n, dtype=np.float64)
    half_pi = math.pi / 2.0
    quarter_pi = math.pi / 4.0
    for idx in range(npairs):
        wk = WK[idx]
        wl = WL[idx]
        best_val = math.inf
        best_theta = 0.0
        best_phi = 0.0
        for ph in range(8):
            phi = quarter_pi * ph
            th, fv = _scan_theta(
                wk, wl, math.cos(phi), math.sin(phi), 0.0, half_pi, 17,
                coarse_iters, top, bot, q, sign, kind, f_id, da, db, eps2,
            )
            if fv < best_val:
                best_val = fv
                best_theta = th
                best_phi = phi
        span = quarter_pi
        for _ in range(refine_cycles):
            ph1, fp = _scan_phi(
                wk, wl, best_theta, best_phi - span, best_phi + span, 9,
                fine_iters, top, bot, q, sign, kind, f_id, da, db, eps2,
            )
            if fp < best_val:
                best_val = fp
                best_phi = ph1
            th1, ft = _scan_theta(
                wk, wl, math.cos(best_phi), math.sin(best_phi), 0.0, half_pi, 17,
                fine_iters, top, bot, q, sign, kind, f_id, da, db, eps2,
            )
            if ft < best_val:
                best_val = ft
                best_theta = th1
            span *= 0.25
        out_val[idx] = best_val
        out_theta[idx] = best_theta
        out_phi[idx] = best_phi
    return out_val, out_theta, out_phi


@njit(cache=True)
def weighted_rows(rows, kind, f_id, da, db, eps2):
    """Weighted objective value of each unnormalized row."""
    count, n = rows.shape
    out = np.empty(count)
    q = np.empty(n, dtype=np.float64)
    for idx in range(count):
        used, p = _spectrum(rows[idx], q, kind, da, db)
        out[idx] = _f_weighted(q, used, p, f_id, eps2)
    return out
