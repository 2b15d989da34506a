"""Global coefficient field on the complement of the Cantor set.

The sector chart knows a(w) and G(w) on one eighth of the fundamental
annulus.  This module turns that into plane-wide evaluators:

* dihedral folding carries any point of an annulus onto the sector,
* descent through the disk hierarchy rescales values, G picking up a
  factor gamma per generation and a a factor 1/(4 gamma), which is the
  unique choice that keeps both continuous across the gluing circles
  and pushes flux 4^-k through every generation-k disk,
* outside the unit disk G = 1 + log|z| and a = 1.

The two collars and the origin disk are evaluated in closed form in the
local frame, so only genuine bulk points pay for chart interpolation.
The power variant composes the level with g -> g^alpha; its coefficient
is a g^(1-alpha)/alpha, which leaves the flux field a grad G untouched
(that is the whole point: the elliptic measure cannot tell the variants
apart).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .chart import ConjugateChart, build_chart, default_chart_params
from .geometry import CantorTree, GeometryError, GeometryParams, build_tree
from . import kernels
from .kernels import BULK, EXTERIOR, INNER, OUTER, UNRESOLVED, ZONE


@dataclass
class Classified:
    """Per-point routing data produced by :meth:`CoefficientField.classify`.

    region is one of the module codes; node/gen identify the annulus;
    (wx, wy) are sector-local coordinates; sx, sy, swapped record the
    fold so gradients can be pushed back.
    """

    region: np.ndarray
    node: np.ndarray
    gen: np.ndarray
    wx: np.ndarray
    wy: np.ndarray
    sx: np.ndarray
    sy: np.ndarray
    swapped: np.ndarray


@dataclass
class CoefficientField:
    """Evaluators for a, G and grad G on the plane minus the set.

    alpha = 1 is the base construction.  alpha != 1 composes the level
    with g^alpha and transforms the coefficient so that a grad G is the
    same vector field; gamma is the value ratio per generation.
    """

    chart: ConjugateChart
    tree: CantorTree
    alpha: float = 1.0
    reciprocal: bool = False

    def __post_init__(self) -> None:
        if abs(self.tree.params.lam - self.chart.params.lam) > 1e-15:
            raise GeometryError("tree and chart disagree on the contraction ratio")
        if self.alpha <= 0.0:
            raise GeometryError(f"alpha={self.alpha} must be positive")

    @property
    def gamma(self) -> float:
        return self.chart.params.gamma

    @property
    def lam(self) -> float:
        return self.chart.params.lam

    @property
    def a_inner(self) -> float:
        return 1.0 / (4.0 * self.gamma)

    # -- routing -----------------------------------------------------------

    def classify(self, x, y) -> Classified:
        """Route points: descend the disk hierarchy, fold, pick a region."""
        x = np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=float)).ravel())
        y = np.ascontiguousarray(np.atleast_1d(np.asarray(y, dtype=float)).ravel())
        p = self.chart.params
        region, node, gen, wx, wy, sx, sy, swapped = kernels.classify_points(
            x,
            y,
            self.tree.centers,
            self.tree.cos_a,
            self.tree.sin_a,
            self.tree.n_nodes,
            self.tree.params.depth,
            self.lam,
            p.rho,
            p.rho1,
            p.rho2_exact,
            p.offset,
        )
        return Classified(region, node, gen, wx, wy, sx, sy, swapped)

    def _sector_values(self, c: Classified, want_grad: bool):
        """Base-field G, a and sector-frame gradient at classified points."""
        p = self.chart.params
        n = c.region.size
        G = np.empty(n)
        a = np.empty(n)
        grad = np.zeros(n, dtype=complex) if want_grad else None
        w = c.wx + 1j * c.wy

        m = c.region == OUTER
        if m.any():
            r = np.abs(w[m])
            G[m] = 1.0 + np.log(r)
            a[m] = 1.0
            if want_grad:
                grad[m] = w[m] / (r * r)
        m = c.region == INNER
        if m.any():
            d = w[m] - p.z1
            rin = np.maximum(np.abs(d), p.lam)
            G[m] = p.gamma * (1.0 + np.log(rin / p.lam))
            a[m] = self.a_inner
            if want_grad:
                grad[m] = p.gamma * d / (rin * rin)
        m = c.region == ZONE
        if m.any():
            G[m] = p.g0 + self.chart.beta * (w[m] ** 4).real
            a[m] = self.chart.a0
            if want_grad:
                grad[m] = 4.0 * self.chart.beta * np.conj(w[m]) ** 3
        m = c.region == BULK
        if m.any():
            G[m], a[m] = self.chart.interp(w[m])
            if want_grad:
                grad[m] = self.chart.interp_grad_G(w[m])
        m = c.region == EXTERIOR
        if m.any():
            r = np.abs(w[m])
            G[m] = 1.0 + np.log(r)
            a[m] = 1.0
            if want_grad:
                grad[m] = w[m] / (r * r)
        return G, a, grad

    def _require_resolved(self, c: Classified) -> None:
        bad = int(np.count_nonzero(c.region == UNRESOLVED))
        if bad:
            raise GeometryError(
                f"{bad} point(s) lie inside generation-{self.tree.params.depth} "
                "disks and cannot be resolved; increase depth"
            )

    def evaluate(self, x, y, want_grad: bool = False):
        """Vectorized (G, a) and optionally grad G, with variant algebra.

        Raises when a point cannot be resolved at the tree depth.  The
        gradient returned here is chart-native: exact in the formula
        regions and interpolated from the transported tangents in bulk.
        """
        shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
        xb, yb = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        c = self.classify(xb.ravel(), yb.ravel())
        self._require_resolved(c)
        G, a, grad = self._sector_values(c, want_grad)

        # descent prefactors; interior annuli only (gen = 0 elsewhere)
        k = c.gen.astype(float)
        gk = self.gamma ** k
        G = gk * G
        a = (4.0 * self.gamma) ** (-k) * a
        if want_grad:
            # unfold: unswap components, then restore the axis signs, then
            # push through the similarity (conjugate derivative rotation)
            gx, gy = grad.real.copy(), grad.imag.copy()
            sw = c.swapped
            gx[sw], gy[sw] = gy[sw], gx[sw].copy()
            gx *= c.sx
            gy *= c.sy
            inner = c.node >= 0
            ca = np.ones_like(gx)
            sa = np.zeros_like(gx)
            ca[inner] = self.tree.cos_a[c.node[inner]]
            sa[inner] = self.tree.sin_a[c.node[inner]]
            scale = gk * self.lam ** (-k)
            grad = scale * (ca + 1j * sa) * (gx + 1j * gy)

        if self.alpha != 1.0:
            Gb = G
            G = Gb ** self.alpha
            a = a * Gb ** (1.0 - self.alpha) / self.alpha
            if want_grad:
                grad = self.alpha * Gb ** (self.alpha - 1.0) * grad
        if self.reciprocal:
            a = 1.0 / a
        if want_grad:
            return G.reshape(shape), a.reshape(shape), grad.reshape(shape)
        return G.reshape(shape), a.reshape(shape)

    # -- spec surface --------------------------------------------------------

    def eval_G(self, x, y=None) -> np.ndarray:
        x, y = _split(x, y)
        return self.evaluate(x, y)[0]

    def eval_a(self, x, y=None) -> np.ndarray:
        x, y = _split(x, y)
        return self.evaluate(x, y)[1]

    def grad_G_native(self, x, y=None) -> np.ndarray:
        """Chart-native gradient as complex gx + i gy."""
        x, y = _split(x, y)
        return self.evaluate(x, y, want_grad=True)[2]

    def eval_grad_G(self, x, y=None, step: float = 1e-5) -> np.ndarray:
        """Central-difference gradient with step scaled by the annulus size.

        Probes that land inside unresolved disks raise, which is also
        what happens when the step would cross the set.
        """
        x, y = _split(x, y)
        shape = np.broadcast(x, y).shape
        xb, yb = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        xf, yf = xb.ravel(), yb.ravel()
        c = self.classify(xf, yf)
        self._require_resolved(c)
        h = step * self.lam ** c.gen.astype(float)
        gx = (self.eval_G(xf + h, yf) - self.eval_G(xf - h, yf)) / (2.0 * h)
        gy = (self.eval_G(xf, yf + h) - self.eval_G(xf, yf - h)) / (2.0 * h)
        return (gx + 1j * gy).reshape(shape)

    def with_orientation(self, kind: str) -> "CoefficientField":
        """Same field with a taken as printed ("standard") or inverted."""
        if kind not in ("standard", "reciprocal"):
            raise GeometryError(f"unknown orientation {kind!r}")
        return dataclasses.replace(self, reciprocal=(kind == "reciprocal"))

    def a_on_grid(self, xs: np.ndarray, ys: np.ndarray, mask: Optional[np.ndarray] = None) -> np.ndarray:
        """Coefficient sampled on a tensor grid, masked cells left at 1.

        The mask must cover every unresolved point (it does for masks
        built from the same tree at admissible resolutions).
        """
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        out = np.ones(X.shape)
        sel = np.ones(X.shape, dtype=bool) if mask is None else ~mask
        c = self.classify(X[sel], Y[sel])
        self._require_resolved(c)
        G, a, _ = self._sector_values(c, False)
        k = c.gen.astype(float)
        a = (4.0 * self.gamma) ** (-k) * a
        if self.alpha != 1.0:
            a = a * (self.gamma ** k * G) ** (1.0 - self.alpha) / self.alpha
        if self.reciprocal:
            a = 1.0 / a
        out[sel] = a
        return out


def _split(x, y):
    """Accept complex arrays or (x, y) pairs."""
    if y is None:
        z = np.asarray(x)
        if np.iscomplexobj(z):
            return z.real, z.imag
        raise TypeError("pass (x, y) arrays or a complex array")
    return x, y


def build_field(
    lam: float = 0.25,
    gamma: float = 0.25,
    depth: int = 5,
    rotations: Union[None, str, Sequence[float]] = None,
    rotation_seed: int = 0,
    alpha: float = 1.0,
    resolution_scale: float = 1.0,
    chart: Optional[ConjugateChart] = None,
) -> CoefficientField:
    """Assemble tree + chart + evaluators for one parameter set."""
    tree = build_tree(
        GeometryParams(lam=lam, depth=depth, rotations=rotations, rotation_seed=rotation_seed)
    )
    if chart is None:
        chart = build_chart(default_chart_params(lam=lam, gamma=gamma), resolution_scale)
    return CoefficientField(chart=chart, tree=tree, alpha=alpha)


def make_variant(base: CoefficientField, kind: str, **kw) -> CoefficientField:
    """Derive a variant field: power(alpha), dimension(lam, gamma), rotated(seed).

    power reuses the base chart and tree (pure algebra); dimension
    rebuilds both; rotated rebuilds only the tree, the sector chart is
    rotation-blind because rotations enter through the similarity maps.
    """
    if kind == "power":
        return CoefficientField(chart=base.chart, tree=base.tree, alpha=float(kw.get("alpha", 2.0)))
    if kind == "dimension":
        return build_field(
            lam=float(kw.get("lam", 1.0 / 3.0)),
            gamma=float(kw.get("gamma", 0.25)),
            depth=base.tree.params.depth,
            resolution_scale=float(kw.get("resolution_scale", 1.0)),
        )
    if kind == "rotated":
        tree = build_tree(
            GeometryParams(
                lam=base.lam,
                depth=base.tree.params.depth,
                rotations="random",
                rotation_seed=int(kw.get("seed", 0)),
            )
        )
        return CoefficientField(chart=base.chart, tree=tree, alpha=base.alpha)
    raise GeometryError(f"unknown variant kind {kind!r}")
