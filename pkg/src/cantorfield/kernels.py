"""Hot evaluation kernels with a compile-free fallback.

Two operations dominate batch evaluation: routing points through the
disk hierarchy (descend, fold, pick a region) and summing the charge
expansion of the transversal label.  Both exist here twice, a numba
version and a pure-numpy version with identical semantics.  The public
names bind to the numba build unless CANTORFIELD_DISABLE_NUMBA is set
(or numba is missing); the numpy versions stay importable under the
_numpy suffix so the two can be compared directly.

Region codes returned by classify_points:
0 exterior, 1 outer collar, 2 inner collar, 3 origin zone, 4 bulk,
5 unresolved (inside a deepest-generation disk).
"""

from __future__ import annotations

import math
import os

import numpy as np

EXTERIOR, OUTER, INNER, ZONE, BULK, UNRESOLVED = 0, 1, 2, 3, 4, 5

NUMBA_ENABLED = os.environ.get("CANTORFIELD_DISABLE_NUMBA", "").strip().lower() not in (
    "1",
    "true",
    "yes",
)
if NUMBA_ENABLED:
    try:
        from numba import njit, prange
    except ImportError:  # pragma: no cover - environment without numba
        NUMBA_ENABLED = False


def classify_points_numpy(
    x, y, centers, cos_a, sin_a, n_nodes, depth, lam, rho, rho1, rho2e, offset
):
    n = x.size
    region = np.empty(n, dtype=np.int8)
    node = np.zeros(n, dtype=np.int64)
    gen = np.zeros(n, dtype=np.int64)
    wx = np.empty(n)
    wy = np.empty(n)
    sx = np.ones(n)
    sy = np.ones(n)
    swapped = np.zeros(n, dtype=bool)

    outside = x * x + y * y > 1.0
    region[outside] = EXTERIOR
    node[outside] = -1
    wx[outside], wy[outside] = x[outside], y[outside]

    active = np.flatnonzero(~outside)
    cur = np.zeros(active.size, dtype=np.int64)
    unres = np.zeros(n, dtype=bool)
    for g in range(1, depth + 1):
        if active.size == 0:
            break
        r2 = lam ** (2 * g)
        nxt = np.full(active.size, -1, dtype=np.int64)
        for j in range(1, 5):
            c = 4 * cur + j
            dx = x[active] - centers[c, 0]
            dy = y[active] - centers[c, 1]
            hit = (nxt < 0) & (dx * dx + dy * dy <= r2)
            nxt[hit] = c[hit]
        stopped = nxt < 0
        node[active[stopped]] = cur[stopped]
        gen[active[stopped]] = g - 1
        active = active[~stopped]
        cur = nxt[~stopped]
        if g == depth:
            node[active] = cur
            gen[active] = depth
            unres[active] = True
    region[unres] = UNRESOLVED
    wx[unres], wy[unres] = 0.0, 0.0

    inner = ~outside & ~unres
    idx = np.flatnonzero(inner)
    nd = node[idx]
    k = gen[idx].astype(float)
    scale = lam ** (-k)
    ca, sa = cos_a[nd], sin_a[nd]
    dx = x[idx] - centers[nd, 0]
    dy = y[idx] - centers[nd, 1]
    lx = scale * (ca * dx + sa * dy)
    ly = scale * (-sa * dx + ca * dy)
    sxi = np.where(lx >= 0.0, 1.0, -1.0)
    syi = np.where(ly >= 0.0, 1.0, -1.0)
    ax, ay = lx * sxi, ly * syi
    sw = ax < ay
    ax[sw], ay[sw] = ay[sw], ax[sw].copy()
    sx[idx], sy[idx], swapped[idx] = sxi, syi, sw
    wx[idx], wy[idx] = ax, ay
    r = np.hypot(ax, ay)
    rin = np.hypot(ax - offset, ay - offset)
    reg = np.full(idx.size, BULK, dtype=np.int8)
    reg[r <= rho2e] = ZONE
    reg[rin <= rho1] = INNER
    reg[r >= rho] = OUTER
    region[idx] = reg
    return region, node, gen, wx, wy, sx, sy, swapped


def mfs_label_numpy(zr, zi, cr, ci, coef, b, chunk=16384):
    """Transversal label in the fold plane: base angle plus charge sums."""
    z = zr + 1j * zi
    out = np.empty(z.size)
    c = cr + 1j * ci
    for i in range(0, z.size, chunk):
        s = slice(i, i + chunk)
        d = np.abs(z[s, None] - c[None, :])
        dc = np.abs(z[s, None] - np.conj(c)[None, :])
        out[s] = np.arctan2(zi[s], zr[s] - b) / math.pi + (np.log(d) - np.log(dc)) @ coef
    return out


def mfs_label_grad_numpy(zr, zi, cr, ci, coef, b, chunk=16384):
    """Label and its fold-plane gradient (gx, gy)."""
    z = zr + 1j * zi
    t = np.empty(z.size)
    gx = np.empty(z.size)
    gy = np.empty(z.size)
    c = cr + 1j * ci
    for i in range(0, z.size, chunk):
        s = slice(i, i + chunk)
        dz = z[s, None] - c[None, :]
        dzc = z[s, None] - np.conj(c)[None, :]
        t[s] = np.arctan2(zi[s], zr[s] - b) / math.pi + (
            np.log(np.abs(dz)) - np.log(np.abs(dzc))
        ) @ coef
        w = 1.0 / (math.pi * (z[s] - b))
        g = 1j * np.conj(w) + np.conj((1.0 / dz - 1.0 / dzc) @ coef)
        gx[s], gy[s] = g.real, g.imag
    return t, gx, gy


if NUMBA_ENABLED:

    @njit(cache=True, parallel=True)
    def _classify_nb(x, y, centers, cos_a, sin_a, depth, lam, rho, rho1, rho2e, offset):
        n = x.size
        region = np.empty(n, dtype=np.int8)
        node = np.empty(n, dtype=np.int64)
        gen = np.zeros(n, dtype=np.int64)
        wx = np.empty(n)
        wy = np.empty(n)
        sx = np.ones(n)
        sy = np.ones(n)
        swapped = np.zeros(n, dtype=np.bool_)
        for i in prange(n):
            xi, yi = x[i], y[i]
            if xi * xi + yi * yi > 1.0:
                region[i] = 0
                node[i] = -1
                wx[i], wy[i] = xi, yi
                continue
            nd = 0
            k = 0
            unres = False
            for g in range(1, depth + 1):
                r2 = lam ** (2 * g)
                found = -1
                for j in range(1, 5):
                    c = 4 * nd + j
                    dx = xi - centers[c, 0]
                    dy = yi - centers[c, 1]
                    if dx * dx + dy * dy <= r2:
                        found = c
                        break
                if found < 0:
                    break
                nd = found
                k = g
                if g == depth:
                    unres = True
            node[i] = nd
            if unres:
                region[i] = 5
                gen[i] = depth
                wx[i], wy[i] = 0.0, 0.0
                continue
            gen[i] = k
            scale = lam ** (-k)
            ca, sa = cos_a[nd], sin_a[nd]
            dx = xi - centers[nd, 0]
            dy = yi - centers[nd, 1]
            lx = scale * (ca * dx + sa * dy)
            ly = scale * (-sa * dx + ca * dy)
            sxi = 1.0 if lx >= 0.0 else -1.0
            syi = 1.0 if ly >= 0.0 else -1.0
            ax, ay = lx * sxi, ly * syi
            if ax < ay:
                swapped[i] = True
                ax, ay = ay, ax
            sx[i], sy[i] = sxi, syi
            wx[i], wy[i] = ax, ay
            r = math.hypot(ax, ay)
            rin = math.hypot(ax - offset, ay - offset)
            if r >= rho:
                region[i] = 1
            elif rin <= rho1:
                region[i] = 2
            elif r <= rho2e:
                region[i] = 3
            else:
                region[i] = 4
        return region, node, gen, wx, wy, sx, sy, swapped

    @njit(cache=True, parallel=True)
    def _mfs_label_nb(zr, zi, cr, ci, coef, b):
        n = zr.size
        m = cr.size
        t = np.empty(n)
        for i in prange(n):
            x, yv = zr[i], zi[i]
            acc = math.atan2(yv, x - b) / math.pi
            for j in range(m):
                dxr = x - cr[j]
                dyi = yv - ci[j]
                dyc = yv + ci[j]
                q = dxr * dxr + dyi * dyi
                qc = dxr * dxr + dyc * dyc
                acc += coef[j] * 0.5 * (math.log(q) - math.log(qc))
            t[i] = acc
        return t

    @njit(cache=True, parallel=True)
    def _mfs_label_grad_nb(zr, zi, cr, ci, coef, b):
        n = zr.size
        m = cr.size
        t = np.empty(n)
        gx = np.empty(n)
        gy = np.empty(n)
        for i in prange(n):
            x, yv = zr[i], zi[i]
            xb = x - b
            d2 = xb * xb + yv * yv
            acc = math.atan2(yv, xb) / math.pi
            sr = -yv / (math.pi * d2)
            si = xb / (math.pi * d2)
            cr_acc = 0.0
            ci_acc = 0.0
            for j in range(m):
                dxr = x - cr[j]
                dyi = yv - ci[j]
                dyc = yv + ci[j]
                q = dxr * dxr + dyi * dyi
                qc = dxr * dxr + dyc * dyc
                acc += coef[j] * 0.5 * (math.log(q) - math.log(qc))
                cr_acc += coef[j] * (dxr / q - dxr / qc)
                ci_acc += coef[j] * (dyc / qc - dyi / q)
            t[i] = acc
            gx[i] = sr + cr_acc
            gy[i] = si - ci_acc
        return t, gx, gy

    def classify_points(
        x, y, centers, cos_a, sin_a, n_nodes, depth, lam, rho, rho1, rho2e, offset
    ):
        return _classify_nb(x, y, centers, cos_a, sin_a, depth, lam, rho, rho1, rho2e, offset)

    def mfs_label(zr, zi, cr, ci, coef, b):
        return _mfs_label_nb(zr, zi, cr, ci, coef, b)

    def mfs_label_grad(zr, zi, cr, ci, coef, b):
        return _mfs_label_grad_nb(zr, zi, cr, ci, coef, b)

else:
    classify_points = classify_points_numpy
    mfs_label = mfs_label_numpy
    mfs_label_grad = mfs_label_grad_numpy
