"""Tracing of chart rows through the label field.

A row is an integral curve of the label gradient, reparameterized by
the label value t, so dz/dt = grad T / |grad T|^2.  Rows are orthogonal
to every label level curve, which is what makes the assembled grid an
orthogonal curvilinear system.  Each row is traced either downward from
its seed on the far diagonal (t = 1) to the sector floor (t = 0), or
upward from a seed on the origin-zone circle; inside the origin zone
rows continue analytically as Re(z^4) = const and are not integrated.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp

from ..geometry import GeometryError
from .field import LabelField

_SQRT2 = math.sqrt(2.0)


def trace_rows_batch(
    field: LabelField,
    seeds: np.ndarray,
    t_eval: np.ndarray,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    hs0: np.ndarray | None = None,
) -> np.ndarray | tuple:
    """Integrate many rows as one stacked system.

    seeds are the row positions at label t_eval[0]; t_eval is monotone.
    Stacking lets the field evaluate all rows per step in one vectorized
    call, which is what makes full-chart tracing affordable.  Returns
    complex positions with shape (len(seeds), len(t_eval)).

    When hs0 is given it must hold the transverse metric factor h_s of
    each row at t_eval[0], and (positions, h_s) are returned.  The
    factor is transported along the row by the compatibility relation
    of orthogonal nets, d(log h_s)/dt = -h_t * d(alpha)/ds, where alpha
    is the direction angle of the label gradient; its cross-curve
    derivative is formed by differencing the field over a short probe,
    which keeps h_s exact to integration accuracy even where the label
    gradient varies too fast for row-to-row differences to resolve.
    """
    seeds = np.asarray(seeds, dtype=complex)
    n = seeds.size
    with_hs = hs0 is not None

    def rhs(t, y):
        gx, gy = field.label_grad(y[0:n], y[n : 2 * n])
        n2 = gx * gx + gy * gy
        out = np.empty_like(y)
        out[0:n], out[n : 2 * n] = gx / n2, gy / n2
        return out

    def rhs_hs(t, y):
        xs, ys = y[0:n], y[n : 2 * n]
        gx, gy = field.label_grad(xs, ys)
        n2 = gx * gx + gy * gy
        inv = 1.0 / np.sqrt(n2)
        # probe along u_s = -i grad/|grad|; arg(g+ conj(g-)) is a
        # branch-safe angle increment
        h = 1e-6
        ux, uy = gy * inv, -gx * inv
        px = np.concatenate([xs + h * ux, xs - h * ux])
        py = np.concatenate([ys + h * uy, ys - h * uy])
        qx, qy = field.label_grad(px, py)
        gxp, gyp, gxm, gym = qx[:n], qy[:n], qx[n:], qy[n:]
        dalpha = np.arctan2(gyp * gxm - gxp * gym, gxp * gxm + gyp * gym) / (2.0 * h)
        out = np.empty_like(y)
        out[0:n], out[n : 2 * n] = gx / n2, gy / n2
        out[2 * n :] = -inv * dalpha
        return out

    if with_hs:
        y0 = np.concatenate([seeds.real, seeds.imag, np.log(np.asarray(hs0, dtype=float))])
    else:
        y0 = np.concatenate([seeds.real, seeds.imag])
    sol = solve_ivp(
        rhs_hs if with_hs else rhs,
        (t_eval[0], t_eval[-1]),
        y0,
        method="DOP853",
        t_eval=t_eval,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise GeometryError(f"batch row trace failed: {sol.message}")
    z = sol.y[0:n] + 1j * sol.y[n : 2 * n]
    if with_hs:
        return z, np.exp(sol.y[2 * n :])
    return z


def land_with_transport(field: LabelField, seed: complex, t_start: float) -> tuple:
    """Landing of the row through seed on t = 1, with its h_s growth.

    Returns (ell, factor): the diagonal distance at which the row meets
    t = 1, and the multiplicative change of the transverse metric factor
    between the seed and the landing.  The growth of log h_s does not
    depend on its starting value, so the factor can be computed before
    the seed value is known.
    """
    z, hs = trace_rows_batch(
        field, np.array([seed]), np.array([t_start, 1.0]), hs0=np.array([1.0])
    )
    zf = z[0, -1]
    return (zf.real + zf.imag) / _SQRT2, float(hs[0, -1])


def diagonal_point(ell: float) -> complex:
    """Point of the far diagonal at distance ell from the origin."""
    return complex(ell / _SQRT2, ell / _SQRT2)
