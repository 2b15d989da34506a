"""Parameters of the fundamental-annulus chart.

The chart lives on the closed sector {x >= y >= 0} of the fundamental
annulus A0, between the unit circle (boundary value 1) and the quarter
disk B1 = B(z1, lam) around the first-quadrant square (boundary value
gamma).  Three regions carry exact formulas and the rest is interpolated:

* outer collar  rho <= |z| <= 1:        G = 1 + log|z|, radial gradient lines
* inner collar  lam <= |z - z1| <= rho1: G = gamma (1 + log(|z - z1|/lam))
* origin disk   |z| <= rho2:            G = g0 + beta Re(z^4)

The default radii reproduce the classical choice at lam = 1/4 and scale
with the diagonal gap between B1 and the unit circle otherwise.  Blend
annuli (where the interpolated label field is faded into the exact
radial fields) sit strictly inside the bulk, so the exact regions are
exact and everything is C1 across the seams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..geometry import GeometryError, corner_offset


@dataclass(frozen=True)
class ChartParams:
    """Geometry and resolution of the sector chart.

    rho, rho1, rho2 are the outer collar radius, the inner collar outer
    radius (around z1) and the origin disk radius.  g0 is the label at
    the origin, in (gamma, 1).  n_s and n_t are the number of level rows
    and of gradient-line columns of the assembled grid.
    """

    lam: float = 0.25
    gamma: float = 0.25
    rho: float = 0.95
    rho1: float = 0.27
    rho2: float = 0.08
    g0: float = 0.5
    n_s: int = 168
    n_t: int = 104
    n_charge_outer: int = 72
    n_charge_inner: int = 88

    # -- derived geometry --------------------------------------------------

    @property
    def offset(self) -> float:
        return corner_offset(self.lam)

    @property
    def z1(self) -> complex:
        o = self.offset
        return complex(o, o)

    @property
    def diag_gap(self) -> float:
        """Width of the diagonal gap between B1 and the unit circle."""
        return 1.0 - (abs(self.z1) + self.lam)

    @property
    def rho_blend(self) -> float:
        """Inner edge of the outer blend annulus."""
        return self.rho - 0.457 * self.diag_gap

    @property
    def rho1_blend(self) -> float:
        """Outer edge of the inner blend annulus (around z1)."""
        return self.rho1 + 0.38 * self.diag_gap

    @property
    def rho2_exact(self) -> float:
        """Radius up to which the quartic origin structure is exact."""
        return 1.25 * self.rho2

    @property
    def rho2_blend(self) -> float:
        """Outer edge of the origin blend annulus."""
        return 1.6 * self.rho2

    # -- interface labels ----------------------------------------------------

    @property
    def s_outer(self) -> float:
        """Label on the outer collar interface |z| = rho."""
        return 1.0 + math.log(self.rho)

    @property
    def s_inner(self) -> float:
        """Label on the inner collar interface |z - z1| = rho1."""
        return self.gamma * (1.0 + math.log(self.rho1 / self.lam))

    def validate(self) -> None:
        z1a = abs(self.z1)
        if not (0.0 < self.gamma < 1.0):
            raise GeometryError(f"gamma={self.gamma} must lie in (0, 1)")
        if not (self.gamma < self.g0 < 1.0):
            raise GeometryError(f"g0={self.g0} must lie in (gamma, 1)")
        if not (self.lam < self.rho1):
            raise GeometryError(f"rho1={self.rho1} must exceed the disk radius lam={self.lam}")
        if not (self.rho < 1.0):
            raise GeometryError(f"rho={self.rho} must be < 1")
        if z1a + self.rho1 >= self.rho_blend:
            raise GeometryError(
                "inner collar B(z1, rho1) reaches into the outer blend annulus; "
                f"need |z1| + rho1 < {self.rho_blend:.4f}"
            )
        if z1a - self.rho1_blend <= self.rho2_blend:
            raise GeometryError("origin disk blend overlaps the inner collar blend")
        if self.rho2_blend >= self.rho_blend:
            raise GeometryError("origin disk blend overlaps the outer blend annulus")
        if not (self.s_inner < self.g0 < self.s_outer):
            raise GeometryError(
                f"g0={self.g0} must lie between the collar interface labels "
                f"({self.s_inner:.4f}, {self.s_outer:.4f})"
            )
        if self.n_s < 24 or self.n_t < 8:
            raise GeometryError("grid too coarse: need n_s >= 24 and n_t >= 8")


def default_chart_params(lam: float = 0.25, gamma: float = 0.25, **kw) -> ChartParams:
    """Chart parameters with radii adapted to the contraction ratio.

    At lam = 1/4 this returns the classical radii (0.95, 0.27, 0.08).
    For other ratios the collar radii scale with the diagonal gap so the
    collars never collide along the diagonal.
    """
    if abs(lam - 0.25) < 1e-12:
        p = ChartParams(lam=lam, gamma=gamma, **kw)
    else:
        o = corner_offset(lam)
        gap = 1.0 - (math.sqrt(2.0) * o + lam)
        if gap <= 0.01:
            raise GeometryError(f"ratio lam={lam} leaves no room between B1 and the unit circle")
        p = ChartParams(
            lam=lam,
            gamma=gamma,
            rho=1.0 - 0.38 * gap,
            rho1=lam + 0.15 * gap,
            rho2=min(0.08, 0.3 * (math.sqrt(2.0) * o - lam)),
            **kw,
        )
    p.validate()
    return p
