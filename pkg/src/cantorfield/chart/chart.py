"""Assembly of the orthogonal chart on the fundamental sector.

The chart is a structured grid: row i samples the level curve with
label s_i, column j samples the t_j level set of the label field, so
columns are the transverse family and the grid is orthogonal wherever
the tracing is faithful.  Rows inside the two collar bands are written
down analytically as circle arcs, including the interface circles
themselves; every other row is traced through the label field from its
seed on the far diagonal.  The fifteen window rows that cross the
origin zone switch to the exact quartic parameterization inside it.

The coefficient is a = (pi/4) h_s / (g'(s) h_t), the quarter-speed
normalization that makes a = 1 on the outer collar.  Metric factors
never come from grid differences: the label gradient swings by an O(1)
factor inside the blend bands, too fast for row-to-row secants.  The
transverse factor h_t is 1/|grad t| straight from the field, and h_s
is transported along each traced row by the compatibility relation of
orthogonal nets, seeded exactly on the far diagonal by the level slope.
Collar rows and origin-zone nodes use their closed forms, and the
coefficient is pinned to its exact constants there (1, 1/(4 gamma),
pi*kappa/(4 beta)) since the runtime uses the same formulas.  Padded
second-order differences of the node positions are still computed and
kept alongside (A_raw) as an independent cross-check away from the
blend bands.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from ..geometry import GeometryError
from .field import LabelField
from .labels import BallCalibration, LevelFunction, build_level_function
from .params import ChartParams
from .tracing import diagonal_point, trace_rows_batch

ROW_INNER, ROW_BULK, ROW_WINDOW, ROW_OUTER = 0, 1, 2, 3

_QUARTER_PI = math.pi / 4.0


def _wrap_pi(x: np.ndarray) -> np.ndarray:
    """Wrap angle differences into [-pi, pi)."""
    return (x + math.pi) % (2.0 * math.pi) - math.pi


def _bilinear(F: np.ndarray, i, j, u, v):
    return (1.0 - v) * ((1.0 - u) * F[i, j] + u * F[i, j + 1]) + v * (
        (1.0 - u) * F[i + 1, j] + u * F[i + 1, j + 1]
    )


def _geom_gaps(first: float, last: float, n: int) -> np.ndarray:
    """n gap widths in geometric progression from first to last."""
    if n == 1:
        return np.array([0.5 * (first + last)])
    return first * (last / first) ** (np.arange(n) / (n - 1.0))


def _t_grid(params: ChartParams, kappa: float, n_t: int) -> np.ndarray:
    """Column labels: {0, 1} exactly, geometric grading at both ends.

    The head resolves the origin zone, whose top label is
    kappa * rho2_exact^4; the tail resolves the turn every row makes as
    it comes in perpendicular to the far diagonal.
    """
    t_zone = kappa * params.rho2_exact ** 4
    gap0 = min(t_zone / 100.0, 0.1 / n_t)
    gap1 = 1.2e-4
    n_head = max(10, n_t // 8)
    n_tail = max(8, n_t // 9)
    n_mid = n_t - 1 - n_head - n_tail
    if n_mid < 8:
        raise GeometryError("t grid too coarse for the graded ends")

    def total(h: float) -> float:
        head = _geom_gaps(gap0, h, n_head).sum()
        tail = _geom_gaps(h, gap1, n_tail).sum()
        return head + n_mid * h + tail

    h = brentq(lambda v: total(v) - 1.0, 1e-7, 0.5, xtol=1e-15)
    gaps = np.concatenate(
        [_geom_gaps(gap0, h, n_head), np.full(n_mid, h), _geom_gaps(h, gap1, n_tail)]
    )
    t = np.concatenate([[0.0], np.cumsum(gaps)])
    t[-1] = 1.0
    if np.any(np.diff(t) <= 0.0):
        raise GeometryError("t grid is not strictly increasing")
    return t


def _s_grid(params: ChartParams, beta: float, c_values: np.ndarray, n_s: int):
    """Row labels from gamma to 1 in blocks.

    inner collar | lower bulk | shoulder | window | shoulder | upper
    bulk | outer collar.  The window rows carry the exact affine labels
    of the origin zone; the geometric shoulders grade the row spacing
    back out to the bulk scale, which keeps the coefficient resolvable
    in the funnel where the sub-window rows crowd together.
    """
    p = params
    n_win = len(c_values)
    whalf = beta * float(c_values[-1])
    n_ic = n_oc = max(8, round(0.06 * n_s))
    n_sh = max(8, round(0.065 * n_s))
    n_rest = n_s - n_ic - n_oc - n_win - 2 * (n_sh - 1)
    if n_rest < 16:
        raise GeometryError("s grid too coarse for the collar and window blocks")
    w_lo = (p.g0 - whalf) - p.s_inner
    w_hi = p.s_outer - (p.g0 + whalf)
    n_lo = max(8, round(n_rest * w_lo / (w_lo + w_hi)))
    n_hi = n_rest - n_lo
    gap_w = beta * float(c_values[1] - c_values[0])
    sh_lo = _geom_gaps(1.5 * gap_w, w_lo / (n_lo + n_sh), n_sh)
    sh_hi = _geom_gaps(1.5 * gap_w, w_hi / (n_hi + n_sh), n_sh)
    lo_edge = p.g0 - whalf - sh_lo.sum()
    hi_edge = p.g0 + whalf + sh_hi.sum()

    blocks = [
        (np.linspace(p.gamma, p.s_inner, n_ic), ROW_INNER),
        (np.linspace(p.s_inner, lo_edge, n_lo + 1)[1:], ROW_BULK),
        ((p.g0 - whalf - np.cumsum(sh_lo))[::-1][1:], ROW_BULK),
        (p.g0 + beta * c_values, ROW_WINDOW),
        ((p.g0 + whalf + np.cumsum(sh_hi))[:-1], ROW_BULK),
        (np.linspace(hi_edge, p.s_outer, n_hi + 1)[:-1], ROW_BULK),
        (np.linspace(p.s_outer, 1.0, n_oc), ROW_OUTER),
    ]
    s = np.concatenate([b for b, _ in blocks])
    kind = np.concatenate([np.full(len(b), k, dtype=np.int8) for b, k in blocks])
    if len(s) != n_s:
        raise GeometryError(f"s grid sums to {len(s)} rows, expected {n_s}")
    if np.any(np.diff(s) <= 0.0):
        raise GeometryError("s grid is not strictly increasing")
    return s, kind


@dataclass
class ConjugateChart:
    """Discrete orthogonal chart with its coefficient.

    Arrays are shaped (n_s, n_t); the chart is immutable by convention
    after build.  g_values holds the level value per row and gp_values
    its derivative with respect to s, so relabeling is pure algebra.
    """

    params: ChartParams
    field: LabelField
    level: LevelFunction
    calib: BallCalibration
    s_values: np.ndarray
    t_values: np.ndarray
    row_kind: np.ndarray
    Z: np.ndarray
    Ts: np.ndarray
    Tt: np.ndarray
    A: np.ndarray
    A_raw: np.ndarray
    g_values: np.ndarray
    gp_values: np.ndarray
    zone: np.ndarray
    kappa: float
    beta: float
    a0: float
    diagnostics: dict

    @property
    def n_s(self) -> int:
        return len(self.s_values)

    @property
    def n_t(self) -> int:
        return len(self.t_values)

    @property
    def theta_values(self) -> np.ndarray:
        return math.pi * self.t_values

    @property
    def r_values(self) -> np.ndarray:
        # transverse labels at quarter speed, so the outer collar is isometric
        return _QUARTER_PI * self.t_values

    @property
    def ellipticity_ratio(self) -> float:
        return float(self.A.max() / self.A.min())

    def relabel(self, f: Callable, fprime: Callable) -> "ConjugateChart":
        """Chart for the composed level function f(g).

        The coefficient transforms covariantly, a -> a / f'(g), and the
        nodes are untouched; f must be strictly increasing on [gamma, 1].
        """
        g = self.g_values
        fp = np.asarray(fprime(g), dtype=float)
        if np.any(fp <= 0.0):
            raise GeometryError("relabeling must be strictly increasing")
        return replace(
            self,
            g_values=np.asarray(f(g), dtype=float),
            gp_values=self.gp_values * fp,
            A=self.A / fp[:, None],
            A_raw=self.A_raw / fp[:, None],
            a0=self.a0 / float(fprime(self.params.g0)),
        )

    # --- reference point evaluation -------------------------------------

    def locate(self, z) -> tuple:
        """Cell and local coordinates for points of the open sector.

        Returns (i, j, u, v): rows i, i+1 and columns j, j+1 bracket z,
        u is the exact transverse fraction from the label field, v the
        projected fraction between the rows.  Callers must keep z inside
        the closed annulus between the hole and the unit circle; the
        formula regions work too, they just cost more here.

        The row is found by scanning the column polyline at the query's
        transverse fraction for the nearest segment.  A bisection on
        local cross products would be faster, but the columns bend
        around the origin zone, so a half-plane test against a single
        distant node can put a query on the wrong side of the chart.
        """
        z = np.asarray(z, dtype=complex).ravel()
        tv, Z = self.t_values, self.Z
        t = np.clip(self.field.label(z.real, z.imag), 0.0, 1.0)
        i = np.empty(z.size, dtype=np.intp)
        j = np.empty(z.size, dtype=np.intp)
        u = np.empty(z.size)
        v = np.empty(z.size)
        for lo in range(0, z.size, 4096):
            sl = slice(lo, min(lo + 4096, z.size))
            i[sl], j[sl], u[sl], v[sl] = self._locate_chunk(z[sl], t[sl])
        return i, j, u, v

    def _locate_chunk(self, z: np.ndarray, t: np.ndarray) -> tuple:
        tv, Z = self.t_values, self.Z
        j = np.clip(np.searchsorted(tv, t) - 1, 0, self.n_t - 2)
        u = (t - tv[j]) / (tv[j + 1] - tv[j])
        P = (1.0 - u)[None, :] * Z[:, j] + u[None, :] * Z[:, j + 1]
        i0 = np.argmin(np.abs(P - z[None, :]), axis=0)
        cols = np.arange(z.size)
        best_i = np.zeros(z.size, dtype=np.intp)
        best_v = np.zeros(z.size)
        best_d = np.full(z.size, np.inf)
        for off in (-2, -1, 0, 1):
            ic = np.clip(i0 + off, 0, self.n_s - 2)
            base = P[ic, cols]
            dvec = P[ic + 1, cols] - base
            w = z - base
            vc = np.clip(
                (dvec.real * w.real + dvec.imag * w.imag) / np.abs(dvec) ** 2, 0.0, 1.0
            )
            d = np.abs(base + vc * dvec - z)
            take = d < best_d
            best_i[take], best_v[take], best_d[take] = ic[take], vc[take], d[take]
        return best_i, j, u, best_v

    @property
    def _logs(self) -> tuple:
        # a and |Ts| ramp exponentially through the label blend bands, so
        # interpolation happens in log space; cached since charts are
        # immutable after build
        cached = self.__dict__.get("_logs_cache")
        if cached is None:
            cached = (np.log(self.A), np.log(np.abs(self.Ts)), np.angle(self.Ts))
            self.__dict__["_logs_cache"] = cached
        return cached

    def interp(self, z) -> tuple:
        """Level value and coefficient at points of the sector."""
        z = np.asarray(z, dtype=complex)
        shape = z.shape
        i, j, u, v = self.locate(z)
        g = self.g_values
        G = g[i] + v * (g[i + 1] - g[i])
        lnA = self._logs[0]
        a = np.exp(_bilinear(lnA, i, j, u, v))
        return G.reshape(shape), a.reshape(shape)

    def interp_grad_G(self, z) -> np.ndarray:
        """Gradient of the level value, as complex g_x + i g_y.

        The tangent field is interpolated as log magnitude plus angle,
        with the angle unwrapped against the cell's first corner; the
        per-cell turn stays well below pi, so the branch is unambiguous.
        """
        z = np.asarray(z, dtype=complex)
        shape = z.shape
        i, j, u, v = self.locate(z)
        _, lnT, angT = self._logs
        mag = _bilinear(lnT, i, j, u, v)
        a00 = angT[i, j]
        ang = a00 + (1.0 - v) * u * _wrap_pi(angT[i, j + 1] - a00) + v * (
            (1.0 - u) * _wrap_pi(angT[i + 1, j] - a00)
            + u * _wrap_pi(angT[i + 1, j + 1] - a00)
        )
        ts = np.exp(mag + 1j * ang)
        gp = self.gp_values
        gpv = gp[i] + v * (gp[i + 1] - gp[i])
        grad = gpv * ts / np.abs(ts) ** 2
        return grad.reshape(shape)

    # --- export ----------------------------------------------------------

    def export_csv(self, path) -> None:
        """Node table: s, theta, x, y, G, R, a; one line per node."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "theta", "x", "y", "G", "R", "a"])
            theta = self.theta_values
            rlab = self.r_values
            for i in range(self.n_s):
                for jj in range(self.n_t):
                    zz = self.Z[i, jj]
                    w.writerow(
                        [
                            f"{self.s_values[i]:.17g}",
                            f"{theta[jj]:.17g}",
                            f"{zz.real:.17g}",
                            f"{zz.imag:.17g}",
                            f"{self.g_values[i]:.17g}",
                            f"{rlab[jj]:.17g}",
                            f"{self.A[i, jj]:.17g}",
                        ]
                    )


def build_chart(
    params: ChartParams | None = None, resolution_scale: float = 1.0
) -> ConjugateChart:
    """Build the chart: label field, level assignment, grid, coefficient."""
    t0 = time.perf_counter()
    p = params if params is not None else ChartParams()
    if resolution_scale != 1.0:
        p = replace(
            p,
            n_s=int(round(p.n_s * resolution_scale)),
            n_t=int(round(p.n_t * resolution_scale)),
        )
    p.validate()
    field = LabelField(p)
    level, calib = build_level_function(field)
    kappa, beta = field.kappa, calib.beta

    s_vals, kind = _s_grid(p, beta, calib.c_values, p.n_s)
    t_vals = _t_grid(p, kappa, p.n_t)
    n_s, n_t = p.n_s, p.n_t

    inner = kind == ROW_INNER
    outer = kind == ROW_OUTER
    win = kind == ROW_WINDOW
    traced = ~(inner | outer)
    i_win = np.where(win)[0]
    c_vals = calib.c_values
    r4 = p.rho2_exact ** 4

    t_desc = t_vals[:0:-1]

    def trace_bulk(s_new: np.ndarray):
        # h_s on the far diagonal is the reciprocal of the level slope
        # there; the tracer transports it down each row with the positions
        ells = np.array([level.inverse(s) for s in s_new])
        seeds = np.array([diagonal_point(e) for e in ells])
        rows, hs_rows = trace_rows_batch(
            field, seeds, t_desc, hs0=1.0 / level.deriv(ells)
        )
        z = np.empty((len(s_new), n_t), dtype=complex)
        h = np.empty((len(s_new), n_t))
        z[:, 1:] = rows[:, ::-1]
        h[:, 1:] = hs_rows[:, ::-1]
        h[:, 0] = h[:, 1]
        return z, h

    Z = np.empty((n_s, n_t), dtype=complex)
    Hs = np.empty((n_s, n_t))
    phase_in = np.exp(1j * (math.pi * t_vals - 0.75 * math.pi))
    rin = p.lam * np.exp(s_vals[inner] / p.gamma - 1.0)
    Z[inner] = p.z1 + rin[:, None] * phase_in[None, :]
    Hs[inner] = (rin / p.gamma)[:, None]
    r_out = np.exp(s_vals[outer] - 1.0)
    Z[outer] = r_out[:, None] * np.exp(1j * _QUARTER_PI * t_vals)[None, :]
    Hs[outer] = r_out[:, None]
    Z[traced], Hs[traced] = trace_bulk(s_vals[traced])

    # sector-floor endpoints: bulk rows above the window end on the axis,
    # below on the near-diagonal stub; window rows use the quartic formula
    upper = traced & ~win & (s_vals > p.g0)
    lower = traced & ~win & (s_vals < p.g0)
    Z[upper, 0] = Z[upper, 1].real + 0.0j
    mid = 0.5 * (Z[lower, 1].real + Z[lower, 1].imag)
    Z[lower, 0] = mid * (1.0 + 1.0j)
    handoff = 0.0
    for k, i in enumerate(i_win):
        c = float(c_vals[k])
        t_star = kappa * math.sqrt(max(r4 * r4 - c * c, 0.0))
        cols = t_vals <= t_star + 1e-15
        exact = (c + 1j * t_vals[cols] / kappa) ** 0.25
        old = Z[i, cols]
        if cols.sum() > 1:
            handoff = max(handoff, float(np.max(np.abs(old[1:] - exact[1:]))))
        Z[i, cols] = exact

    a0 = math.pi * kappa / (4.0 * beta)

    def tangents(Zc: np.ndarray):
        # transverse tangents, exact: rows are integral curves of the label
        # gradient, dz/dt = grad t / |grad t|^2, and the collar rows lie in
        # pure formula regions, so one field call covers every node
        gx, gy = field.label_grad(Zc.real.ravel(), Zc.imag.ravel())
        grad_t = (gx + 1j * gy).reshape(Zc.shape)
        origin = Zc == 0.0
        grad_t[origin] = 1.0  # the label gradient vanishes there; patched below
        Tt = grad_t / np.abs(grad_t) ** 2
        zone = np.abs(Zc) <= p.rho2_exact * (1.0 + 1e-12)
        nz = zone & ~origin
        Tt[nz] = 0.25j / kappa * Zc[nz] / Zc[nz] ** 4
        return Tt, zone, origin, nz

    def coefficient(Tt, zone, kind_now):
        A = _QUARTER_PI * Hs / np.abs(Tt)
        A[kind_now == ROW_OUTER] = 1.0
        A[kind_now == ROW_INNER] = 1.0 / (4.0 * p.gamma)
        A[zone] = a0
        return A

    # the label blend bands push the coefficient through steep exponential
    # ramps; bisect row pairs until the per-cell log step is resolvable,
    # tightening the cap with resolution so interpolation error keeps
    # contracting under refinement
    cap = 0.5 * 168.0 / float(p.n_s)
    n_inserted = 0
    for pass_no in range(8):
        Tt, zone, origin, nz = tangents(Z)
        A = coefficient(Tt, zone, kind)
        step = np.abs(np.diff(np.log(A), axis=0)).max(axis=1)
        same = kind[:-1] == kind[1:]
        frozen = same & (kind[:-1] != ROW_BULK)
        hit = np.where((step > cap) & ~frozen & (np.diff(s_vals) > 1e-9))[0]
        if hit.size == 0 or pass_no == 7 or n_inserted + hit.size > 4 * n_s:
            break
        s_new = 0.5 * (s_vals[hit] + s_vals[hit + 1])
        z_new, h_new = trace_bulk(s_new)
        up = s_new > p.g0
        z_new[up, 0] = z_new[up, 1].real + 0.0j
        mid_new = 0.5 * (z_new[~up, 1].real + z_new[~up, 1].imag)
        z_new[~up, 0] = mid_new * (1.0 + 1.0j)
        pos = hit + 1
        Z = np.insert(Z, pos, z_new, axis=0)
        Hs = np.insert(Hs, pos, h_new, axis=0)
        s_vals = np.insert(s_vals, pos, s_new)
        kind = np.insert(kind, pos, ROW_BULK)
        n_inserted += hit.size

    inner = kind == ROW_INNER
    outer = kind == ROW_OUTER
    win = kind == ROW_WINDOW
    traced = ~(inner | outer)
    i_win = np.where(win)[0]
    lower = traced & ~win & (s_vals < p.g0)

    x, y = Z.real, Z.imag
    tol = 1e-8
    viol = np.maximum.reduce(
        [
            np.maximum(-y, 0.0),
            np.maximum(y - x, 0.0),
            np.maximum(np.abs(Z) - 1.0, 0.0),
            np.maximum(p.lam - np.abs(Z - p.z1), 0.0),
        ]
    )
    if float(viol.max()) > tol:
        n_bad = int((viol > tol).sum())
        raise GeometryError(f"{n_bad} chart nodes left the sector closure")

    # transverse metric factor: closed form in the origin zone, transported
    # values elsewhere; the first column copies its neighbor across the
    # tiny head gap of the t grid
    hs_handoff = 0.0
    nzc = nz.copy()
    nzc[:, 0] = False  # first column holds copies, not transported values
    if nzc.any():
        hs_c = 1.0 / (4.0 * beta * np.abs(Z[nzc]) ** 3)
        hs_handoff = float(np.max(np.abs(Hs[nzc] / hs_c - 1.0)))
    if nz.any():
        Hs[nz] = 1.0 / (4.0 * beta * np.abs(Z[nz]) ** 3)

    u_s = -1j * Tt / np.abs(Tt)
    Ts = u_s * Hs
    Ts[nz] = Z[nz] / (4.0 * beta * Z[nz] ** 4)
    oi, oj = np.where(origin)
    for arr in (Tt, Ts, Hs):
        arr[oi, oj] = arr[oi, 1]
    Ht = np.abs(Tt)
    A = coefficient(Tt, zone, kind)

    # second-order differences of the node positions give an independent
    # estimate of both tangent families; kept purely as a cross-check,
    # since inside the blend bands the gradient turns too fast between
    # rows for secants to track it
    pad0 = np.conj(Z[:, 1])
    d2 = inner | lower
    d2[i_win[c_vals < 0.0]] = True
    pad0[d2] = 1j * np.conj(Z[d2, 1])
    pad1 = 1j * np.conj(Z[:, -2])
    Zp = np.concatenate([pad0[:, None], Z, pad1[:, None]], axis=1)
    tp = np.concatenate([[-t_vals[1]], t_vals, [2.0 - t_vals[-2]]])
    Tt_fd = np.gradient(Zp, tp, axis=1)[:, 1:-1]
    ds0 = s_vals[1] - s_vals[0]
    ds1 = s_vals[-1] - s_vals[-2]
    bot = p.z1 + (Z[0] - p.z1) * math.exp(-ds0 / p.gamma)
    top = Z[-1] * math.exp(ds1)
    Zp = np.vstack([bot[None, :], Z, top[None, :]])
    sp = np.concatenate([[s_vals[0] - ds0], s_vals, [s_vals[-1] + ds1]])
    Ts_fd = np.gradient(Zp, sp, axis=0)[1:-1]
    A_raw = _QUARTER_PI * np.abs(Ts_fd) / np.abs(Tt_fd)

    jac = np.diff(Z, axis=0)[:, :-1] * np.conj(np.diff(Z, axis=1)[:-1])
    jac_min = float(np.min(-jac.imag))  # cross(dZ_s, dZ_t) = -Im(dZ_s conj(dZ_t))
    if jac_min <= 0.0:
        i_bad, j_bad = np.unravel_index(int(np.argmin(-jac.imag)), jac.shape)
        raise GeometryError(
            f"grid cell ({i_bad}, {j_bad}) is folded: rows s={s_vals[i_bad]:.6f},"
            f" {s_vals[i_bad + 1]:.6f} cross"
        )
    dot = Ts.real * Tt.real + Ts.imag * Tt.imag
    orth = np.abs(dot) / (Hs * Ht)
    orth_in = orth[1:-1, 1:-1]
    orth_max = float(orth_in.max())
    if orth_max >= 1e-3:
        raise GeometryError(f"orthogonality defect {orth_max:.2e} at an interior node")
    dot_fd = Ts_fd.real * Tt_fd.real + Ts_fd.imag * Tt_fd.imag
    orth_fd = (np.abs(dot_fd) / (np.abs(Ts_fd) * np.abs(Tt_fd)))[1:-1, 1:-1]

    strict_in = inner.copy()
    strict_in[np.where(inner)[0][-1]] = False
    strict_out = outer.copy()
    strict_out[np.where(outer)[0][0]] = False
    # nodes clear of the blend bands, where secants are trustworthy
    R, Rin = np.abs(Z), np.abs(Z - p.z1)
    smooth = ~(
        ((R >= p.rho_blend) & (R <= p.rho))
        | ((Rin >= p.rho1) & (Rin <= p.rho1_blend))
        | ((R >= p.rho2_exact) & (R <= p.rho2_blend))
    )
    smooth[inner | outer] = False
    smooth &= ~zone
    smooth[:, [0, -1]] = False
    diagnostics = {
        "build_seconds": time.perf_counter() - t0,
        "field_fit_residual": field.fit_residual,
        "origin_affine_defect": field.origin_affine_defect,
        "level_intercept_defect": calib.fit_intercept_defect,
        "level_fit_residual": calib.fit_residual,
        "sector_violation_max": float(viol.max()),
        "orthogonality_max": orth_max,
        "orthogonality_p99": float(np.quantile(orth_in, 0.99)),
        "orthogonality_fd_max": float(orth_fd.max()),
        "orthogonality_fd_p99": float(np.quantile(orth_fd, 0.99)),
        "cell_jacobian_min": jac_min,
        "window_handoff_max": handoff,
        "hs_handoff_defect": hs_handoff,
        "a_defect_outer": float(np.abs(A_raw[strict_out] - 1.0).max()),
        "a_defect_inner": float(np.abs(A_raw[strict_in] * 4.0 * p.gamma - 1.0).max()),
        "a_fd_agreement": float(np.abs(A_raw[smooth] / A[smooth] - 1.0).max()),
        "a_fd_agreement_p50": float(np.quantile(np.abs(A_raw[smooth] / A[smooth] - 1.0), 0.5)),
        "ellipticity_min": float(A.min()),
        "ellipticity_max": float(A.max()),
        "n_rows_traced": int(traced.sum()),
        "n_rows_inserted": int(n_inserted),
        "log_step_cap": cap,
    }

    return ConjugateChart(
        params=p,
        field=field,
        level=level,
        calib=calib,
        s_values=s_vals,
        t_values=t_vals,
        row_kind=kind,
        Z=Z,
        Ts=Ts,
        Tt=Tt,
        A=A,
        A_raw=A_raw,
        g_values=s_vals.copy(),
        gp_values=np.ones(len(s_vals)),
        zone=zone,
        kappa=kappa,
        beta=beta,
        a0=a0,
        diagnostics=diagnostics,
    )
