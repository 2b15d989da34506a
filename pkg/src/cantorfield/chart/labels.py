"""Level values along the reference diagonal.

Every chart row is seeded on the far diagonal segment, so assigning a
level value G to each row amounts to choosing a monotone function g of
the distance ell from the origin along the diagonal.  On the collar
pieces g is forced by the exact formulas:

    ell in [rho, 1]:                      g = 1 + log(ell)
    ell in [|z1| + lam, |z1| + rho1]:     g = gamma (1 + log((ell - |z1|)/lam))

Across the gap between the collars g is a monotone C1 Hermite bridge.
Its interior shape is pinned by the origin zone: rows that cross the
origin zone follow Re(z^4) = c exactly, and the bridge passes through
their diagonal landings with values g0 + beta c, so the level field
inside the zone is exactly affine in Re(z^4).  The bridge slope at each
landing is not free either: it is the reciprocal of the transverse
metric factor h_s there, obtained by transporting h_s up the row from
the zone circle where the affine structure forces it.  Interpolated
slopes at the landings would miss by tens of percent, because dg/d(ell)
swings over two orders of magnitude through the pinch between the hole
and the outer circle.  The slope beta is fitted by least squares
against a provisional three-knot bridge; the fitted intercept must come
back as g0, which is recorded as a construction check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from ..geometry import GeometryError
from .field import LabelField
from .params import ChartParams
from .tracing import land_with_transport

_SQRT2 = math.sqrt(2.0)


def _limited_slopes(x: np.ndarray, y: np.ndarray, m_left: float, m_right: float) -> np.ndarray:
    """Monotone interior slopes (Fritsch-Butland), forced end slopes.

    End slopes are clipped against the monotonicity bound instead of
    trusted blindly, so the spline stays increasing no matter what.
    """
    sec = np.diff(y) / np.diff(x)
    if np.any(sec <= 0.0):
        raise GeometryError("level knots are not strictly increasing")
    m = np.empty(len(x))
    m[0], m[-1] = m_left, m_right
    for i in range(1, len(x) - 1):
        s0, s1 = sec[i - 1], sec[i]
        m[i] = 3.0 * s0 * s1 / (max(s0, s1) + 2.0 * min(s0, s1))
    m[0] = min(m[0], 3.0 * sec[0])
    m[-1] = min(m[-1], 3.0 * sec[-1])
    return m


@dataclass(frozen=True)
class BallCalibration:
    """Affine structure of the level field inside the origin zone."""

    beta: float
    a0: float
    fit_intercept_defect: float
    fit_residual: float
    c_values: np.ndarray
    landings: np.ndarray


class LevelFunction:
    """Monotone C1 map from diagonal position to level value."""

    def __init__(self, params: ChartParams, bridge: CubicHermiteSpline):
        self.params = params
        self.bridge = bridge
        self.ell_inner = abs(params.z1) + params.rho1
        self.ell_outer = params.rho

    def value(self, ell):
        ell = np.asarray(ell, dtype=float)
        p = self.params
        z1a = abs(p.z1)
        out = np.empty(ell.shape)
        lo = ell <= self.ell_inner
        hi = ell >= self.ell_outer
        mid = ~(lo | hi)
        out[lo] = p.gamma * (1.0 + np.log((ell[lo] - z1a) / p.lam))
        out[hi] = 1.0 + np.log(ell[hi])
        out[mid] = self.bridge(ell[mid])
        return out

    def deriv(self, ell):
        ell = np.asarray(ell, dtype=float)
        p = self.params
        z1a = abs(p.z1)
        out = np.empty(ell.shape)
        lo = ell <= self.ell_inner
        hi = ell >= self.ell_outer
        mid = ~(lo | hi)
        out[lo] = p.gamma / (ell[lo] - z1a)
        out[hi] = 1.0 / ell[hi]
        out[mid] = self.bridge.derivative()(ell[mid])
        return out

    def inverse(self, s: float) -> float:
        """Diagonal position whose level value is s."""
        p = self.params
        if s >= p.s_outer:
            return math.exp(s - 1.0)
        if s <= p.s_inner:
            return abs(p.z1) + p.lam * math.exp(s / p.gamma - 1.0)
        return brentq(
            lambda e: float(self.bridge(e)) - s, self.ell_inner, self.ell_outer, xtol=1e-14
        )


def build_level_function(
    field: LabelField, n_window: int = 15
) -> tuple[LevelFunction, BallCalibration]:
    p = field.params
    z1a = abs(p.z1)
    ell_a, ell_b = z1a + p.rho1, p.rho
    s_a, s_b = p.s_inner, p.s_outer
    m_a, m_b = p.gamma / p.rho1, 1.0 / p.rho

    # rows crossing the origin zone, seeded on its circle at Re(z^4) = c
    r4 = p.rho2_exact ** 4
    c = r4 * np.linspace(-1.0, 1.0, n_window)
    zeta = c + 1j * np.sqrt(np.maximum(r4 * r4 - c * c, 0.0))
    seeds = zeta ** 0.25
    t_seed = field.kappa * zeta.imag
    pairs = [land_with_transport(field, complex(z), float(t)) for z, t in zip(seeds, t_seed)]
    landings = np.array([e for e, _ in pairs])
    growth = np.array([f for _, f in pairs])
    if np.any(np.diff(landings) <= 0.0):
        raise GeometryError("origin-zone rows land out of order on the diagonal")
    ell0 = float(landings[n_window // 2])  # c = 0 row

    # provisional three-knot bridge, then the affine fit of the window
    knots = np.array([ell_a, ell0, ell_b])
    vals = np.array([s_a, p.g0, s_b])
    prov = CubicHermiteSpline(knots, vals, _limited_slopes(knots, vals, m_a, m_b))
    target = prov(landings) - p.g0
    design = np.column_stack([c, np.ones_like(c)])
    (beta, intercept), *_ = np.linalg.lstsq(design, target, rcond=None)
    beta = float(beta)
    if beta <= 0.0:
        raise GeometryError("origin-zone level slope must be positive")
    fit_res = float(np.max(np.abs(target - design @ [beta, intercept])))
    calib = BallCalibration(
        beta=beta,
        a0=math.pi * field.kappa / (4.0 * beta),
        fit_intercept_defect=float(abs(intercept)),
        fit_residual=fit_res,
        c_values=c,
        landings=landings,
    )

    # final bridge: through the window landings with exactly affine values,
    # plus filler knots from the provisional bridge on both sides
    g_lo = p.g0 - beta * r4
    g_hi = p.g0 + beta * r4
    fill_lo = np.linspace(s_a, g_lo, 8)[1:-1]
    fill_hi = np.linspace(g_hi, s_b, 8)[1:-1]
    ell_fill_lo = [brentq(lambda e: float(prov(e)) - s, ell_a, ell_b, xtol=1e-14) for s in fill_lo]
    ell_fill_hi = [brentq(lambda e: float(prov(e)) - s, ell_a, ell_b, xtol=1e-14) for s in fill_hi]
    ells = np.concatenate([[ell_a], ell_fill_lo, landings, ell_fill_hi, [ell_b]])
    gvals = np.concatenate([[s_a], fill_lo, p.g0 + beta * c, fill_hi, [s_b]])
    order = np.argsort(ells)
    ells, gvals = ells[order], gvals[order]
    if np.any(np.diff(ells) <= 0.0) or np.any(np.diff(gvals) <= 0.0):
        raise GeometryError("bridge knots are not strictly monotone")
    slopes = _limited_slopes(ells, gvals, m_a, m_b)
    # at the landings the gauge slope is not free: transporting h_s up a
    # window row from the zone circle, where it equals 1/(4 beta r^3),
    # fixes dG/d(ell) = 1/h_s there, and only that choice keeps the level
    # field exactly affine in Re(z^4) across the whole zone
    hs_circle = 1.0 / (4.0 * beta * p.rho2_exact ** 3)
    slopes[np.searchsorted(ells, landings)] = 1.0 / (hs_circle * growth)
    bridge = CubicHermiteSpline(ells, gvals, slopes)
    u = np.linspace(0.0, 1.0, 33)
    probe = (ells[:-1, None] * (1.0 - u) + ells[1:, None] * u).ravel()
    if float(np.min(bridge.derivative()(probe))) <= 0.0:
        raise GeometryError("bridge loses monotonicity with the transported slopes")
    return LevelFunction(p, bridge), calib
