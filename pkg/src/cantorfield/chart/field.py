"""Transversal label field on the chart sector.

Level curves of this field are the cross curves of the chart: they run
from the inner disk boundary (circle of radius lam around z1) to the
unit circle, labelled t in [0, 1].  The t = 1 curve is the diagonal
segment, the t = 0 curve is the floor of the sector (x axis plus the
near side of the inner disk).

Inside the collars and the origin disk the labels are forced by the
exact fields there:

* inner collar:  t = (arg(z - z1) + 3 pi/4) / pi
* outer collar:  t = 4 arg(z) / pi
* origin disk:   t proportional to Im(z^4)

In the bulk the field is harmonic with matching boundary values.  The
sector folds onto the upper half plane under zeta = z^4, where the bulk
domain becomes a half disk of radius rho^4 minus the image of the inner
collar disk.  The harmonic interpolant is represented there by the
angle seen from b = z1^4 (which carries the 0/1 jump across the inner
hole) plus a sum of mirrored logarithmic charges with real
coefficients:

    T0(zeta) = arg(zeta - b)/pi + sum_m c_m (log|zeta - q_m| - log|zeta - conj q_m|)

Every term vanishes on the real axis and is constant on the part of it
outside the hole, so the field is exactly 0 and 1 on the straight edges
of the sector; the coefficients are fitted by least squares on the arc
and on the hole boundary only.  The final field blends T0 into the
exact collar fields with quintic ramps, which keeps it C1 (the blended
fields agree on the seam circles, so the ramp terms vanish there).

The collar fields are angular, with zero derivative normal to the seam
circles, while the harmonic bulk field must carry flux through them;
no boundary fit can reconcile that, so the blend annuli contain a
genuine shear band where the label gradient swings by an O(1) factor.
The field stays C1 and monotone through the band, but consumers must
not difference it numerically across rows there: tangents and metric
factors of the chart are therefore computed from the field itself and
from a transport equation along the traced curves, never from grid
differences.
"""

from __future__ import annotations

import numpy as np

from .. import kernels
from ..geometry import GeometryError
from .params import ChartParams

_CHUNK = 1 << 16


def smoothstep(u: np.ndarray) -> np.ndarray:
    """Quintic ramp: 0 for u <= 0, 1 for u >= 1, C2 in between."""
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (10.0 + u * (6.0 * u - 15.0))


def smoothstep_deriv(u: np.ndarray) -> np.ndarray:
    v = np.clip(u, 0.0, 1.0)
    return 30.0 * v * v * (1.0 - v) * (1.0 - v)


def _cheb_nodes(a: float, b: float, n: int) -> np.ndarray:
    """n nodes of [a, b] clustered toward both ends (open interval)."""
    k = np.arange(1, n + 1)
    u = 0.5 * (1.0 - np.cos(np.pi * (k - 0.5) / n))
    return a + (b - a) * u


class LabelField:
    """Blended transversal label t and its gradient on the sector."""

    def __init__(self, params: ChartParams):
        params.validate()
        self.params = params
        self.b = (params.z1 ** 4).real  # z1^4 is real negative on the diagonal
        self._fit()
        self._calibrate_origin()

    # -- construction --------------------------------------------------------

    def _hole_point(self, phi: np.ndarray, radius: float) -> np.ndarray:
        """Map angles around z1 to the fold plane."""
        z = self.params.z1 + radius * np.exp(1j * phi)
        return z ** 4

    def _fit(self) -> None:
        p = self.params
        r_arc = p.rho ** 4
        n_out, n_in = p.n_charge_outer, p.n_charge_inner

        self.charges = np.concatenate(
            [
                1.6 * r_arc * np.exp(1j * _cheb_nodes(0.0, np.pi, n_out)),
                self._hole_point(_cheb_nodes(-0.75 * np.pi, 0.25 * np.pi, n_in), 0.55 * p.rho1),
            ]
        )

        def colloc(n_scale: int):
            phi_arc = _cheb_nodes(0.0, np.pi, n_scale * n_out)
            phi_hole = _cheb_nodes(-0.75 * np.pi, 0.25 * np.pi, n_scale * n_in)
            zeta = np.concatenate(
                [r_arc * np.exp(1j * phi_arc), self._hole_point(phi_hole, p.rho1)]
            )
            data = np.concatenate([phi_arc / np.pi, (phi_hole + 0.75 * np.pi) / np.pi])
            return zeta, data

        zeta, data = colloc(4)
        rhs = data - self._base(zeta)
        a_mat = self._charge_matrix(zeta)
        self.coef, *_ = np.linalg.lstsq(a_mat, rhs, rcond=None)
        self._cr = np.ascontiguousarray(self.charges.real)
        self._ci = np.ascontiguousarray(self.charges.imag)

        zeta_v, data_v = colloc(7)
        self.fit_residual = float(np.max(np.abs(self.t_bulk(zeta_v) - data_v)))
        if self.fit_residual > 1e-4:
            raise GeometryError(
                f"label field boundary fit did not converge (residual {self.fit_residual:.2e})"
            )

    def _calibrate_origin(self) -> None:
        """Fit the affine coefficient of the field near the origin.

        T0 vanishes on the real axis, so near zeta = 0 it is kappa * Im
        zeta to leading order; kappa is fitted on the circle bounding
        the exact origin zone and the worst deviation is recorded.
        """
        p = self.params
        phi = np.linspace(0.02, 0.25 * np.pi - 0.02, 96)
        zeta = (p.rho2_exact * np.exp(1j * phi)) ** 4
        vals = self.t_bulk(zeta)
        im = zeta.imag
        self.kappa = float(vals @ im / (im @ im))
        if not self.kappa > 0.0:
            raise GeometryError("origin calibration produced a non-positive slope")
        self.origin_affine_defect = float(np.max(np.abs(vals - self.kappa * im)))

    # -- bulk field in the fold plane ----------------------------------------

    def _base(self, zeta: np.ndarray) -> np.ndarray:
        return np.arctan2(zeta.imag, zeta.real - self.b) / np.pi

    def _charge_matrix(self, zeta: np.ndarray) -> np.ndarray:
        d = zeta[:, None] - self.charges[None, :]
        dc = zeta[:, None] - np.conj(self.charges)[None, :]
        return np.log(np.abs(d)) - np.log(np.abs(dc))

    def t_bulk(self, zeta: np.ndarray) -> np.ndarray:
        """Harmonic label in fold-plane coordinates."""
        zeta = np.asarray(zeta, dtype=complex)
        if kernels.NUMBA_ENABLED:
            flat = np.ascontiguousarray(zeta.ravel())
            t = kernels.mfs_label(
                flat.real.copy(), flat.imag.copy(), self._cr, self._ci, self.coef, self.b
            )
            return t.reshape(zeta.shape)
        out = np.empty(zeta.shape)
        flat, oflat = zeta.ravel(), out.ravel()
        for i in range(0, flat.size, _CHUNK):
            s = slice(i, i + _CHUNK)
            oflat[s] = self._base(flat[s]) + self._charge_matrix(flat[s]) @ self.coef
        return out

    def grad_bulk(self, zeta: np.ndarray) -> np.ndarray:
        """Fold-plane gradient of t_bulk as a complex number tx + i ty."""
        zeta = np.asarray(zeta, dtype=complex)
        if kernels.NUMBA_ENABLED:
            flat = np.ascontiguousarray(zeta.ravel())
            _, gx, gy = kernels.mfs_label_grad(
                flat.real.copy(), flat.imag.copy(), self._cr, self._ci, self.coef, self.b
            )
            return (gx + 1j * gy).reshape(zeta.shape)
        out = np.empty(zeta.shape, dtype=complex)
        flat, oflat = zeta.ravel(), out.ravel()
        for i in range(0, flat.size, _CHUNK):
            s = slice(i, i + _CHUNK)
            w = 1.0 / (np.pi * (flat[s] - self.b))
            d = 1.0 / (flat[s][:, None] - self.charges[None, :])
            dc = 1.0 / (flat[s][:, None] - np.conj(self.charges)[None, :])
            oflat[s] = 1j * np.conj(w) + np.conj((d - dc) @ self.coef)
        return out

    # -- blended field on the sector -----------------------------------------

    def _pieces(self, x: np.ndarray, y: np.ndarray):
        p = self.params
        r = np.hypot(x, y)
        wx, wy = x - p.offset, y - p.offset
        rin = np.hypot(wx, wy)

        u_out = (r - p.rho_blend) / (p.rho - p.rho_blend)
        u_in = (p.rho1_blend - rin) / (p.rho1_blend - p.rho1)
        u_ball = (p.rho2_blend - r) / (p.rho2_blend - p.rho2_exact)
        chi_out, chi_in, chi_ball = smoothstep(u_out), smoothstep(u_in), smoothstep(u_ball)

        w_in = chi_in
        w_out = chi_out * (1.0 - chi_in)
        w_ball = chi_ball * (1.0 - chi_in) * (1.0 - chi_out)
        w_bulk = 1.0 - w_in - w_out - w_ball
        return r, wx, wy, rin, (u_out, u_in, u_ball), (chi_out, chi_in, chi_ball), (
            w_in,
            w_out,
            w_ball,
            w_bulk,
        )

    def weights(self, x, y):
        """Blend weights (inner, outer, origin, bulk); they sum to 1."""
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return self._pieces(x, y)[-1]

    def label(self, x, y) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        shape = x.shape
        x, y = np.atleast_1d(x), np.atleast_1d(y)
        r, wx, wy, rin, _, _, (w_in, w_out, w_ball, w_bulk) = self._pieces(x, y)
        t_in = (np.arctan2(wy, wx) + 0.75 * np.pi) / np.pi
        t_out = 4.0 * np.arctan2(y, x) / np.pi
        zeta = (x + 1j * y) ** 4
        out = w_in * t_in + w_out * t_out + w_ball * (self.kappa * zeta.imag)
        m = w_bulk > 0.0
        if np.any(m):
            out[m] += w_bulk[m] * self.t_bulk(zeta[m])
        return out.reshape(shape)

    def label_grad(self, x, y):
        """Gradient of the blended label; returns (tx, ty) arrays."""
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        shape = x.shape
        x, y = np.atleast_1d(x), np.atleast_1d(y)
        p = self.params
        r, wx, wy, rin, (u_out, u_in, u_ball), chis, ws = self._pieces(x, y)
        chi_out, chi_in, chi_ball = chis
        w_in, w_out, w_ball, w_bulk = ws
        zeta = (x + 1j * y) ** 4

        tiny = np.finfo(float).tiny
        inv_r = np.where(r > 0.0, 1.0 / np.maximum(r, tiny), 0.0)
        inv_rin = np.where(rin > 0.0, 1.0 / np.maximum(rin, tiny), 0.0)

        t_in = (np.arctan2(wy, wx) + 0.75 * np.pi) / np.pi
        t_out = 4.0 * np.arctan2(y, x) / np.pi
        t_ball = self.kappa * zeta.imag
        t_bulk = np.zeros_like(x)
        gx_bulk = np.zeros_like(x)
        gy_bulk = np.zeros_like(x)
        m = w_bulk > 0.0
        if np.any(m):
            t_bulk[m] = self.t_bulk(zeta[m])
            gz = np.conj(4.0 * (x[m] + 1j * y[m]) ** 3) * self.grad_bulk(zeta[m])
            gx_bulk[m], gy_bulk[m] = gz.real, gz.imag

        # field gradients (angular fields have tangential gradients)
        gx_in = -(1.0 / np.pi) * wy * inv_rin * inv_rin
        gy_in = (1.0 / np.pi) * wx * inv_rin * inv_rin
        gx_out = -(4.0 / np.pi) * y * inv_r * inv_r
        gy_out = (4.0 / np.pi) * x * inv_r * inv_r
        zc3 = 4.0 * (x + 1j * y) ** 3
        gx_ball = self.kappa * zc3.imag
        gy_ball = self.kappa * zc3.real

        # weight gradients via the ramp chain rule
        d_out = smoothstep_deriv(u_out) / (p.rho - p.rho_blend)
        d_in = -smoothstep_deriv(u_in) / (p.rho1_blend - p.rho1)
        d_ball = -smoothstep_deriv(u_ball) / (p.rho2_blend - p.rho2_exact)
        cox, coy = d_out * x * inv_r, d_out * y * inv_r
        cix, ciy = d_in * wx * inv_rin, d_in * wy * inv_rin
        cbx, cby = d_ball * x * inv_r, d_ball * y * inv_r

        win_x, win_y = cix, ciy
        wout_x = cox * (1.0 - chi_in) - chi_out * cix
        wout_y = coy * (1.0 - chi_in) - chi_out * ciy
        oc = (1.0 - chi_in) * (1.0 - chi_out)
        wball_x = cbx * oc - chi_ball * (cix * (1.0 - chi_out) + (1.0 - chi_in) * cox)
        wball_y = cby * oc - chi_ball * (ciy * (1.0 - chi_out) + (1.0 - chi_in) * coy)
        wbulk_x = -(win_x + wout_x + wball_x)
        wbulk_y = -(win_y + wout_y + wball_y)

        gx = (
            w_in * gx_in + w_out * gx_out + w_ball * gx_ball + w_bulk * gx_bulk
            + t_in * win_x + t_out * wout_x + t_ball * wball_x + t_bulk * wbulk_x
        )
        gy = (
            w_in * gy_in + w_out * gy_out + w_ball * gy_ball + w_bulk * gy_bulk
            + t_in * win_y + t_out * wout_y + t_ball * wball_y + t_bulk * wbulk_y
        )
        return gx.reshape(shape), gy.reshape(shape)
