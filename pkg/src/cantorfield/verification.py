"""Named invariant checks with thresholds, refinement series and reports.

Every check packs its measurements into a CheckReport that serializes to
JSON and aggregates into a markdown table with a CI exit code.  All
sampling is seeded, so a report is a pure function of (field, arguments).

The suite:

* ellipticity: a stays positive and bounded, and the max/min spread over
  an annulus is the same at every generation, because descent rescales a
  by a constant per level.
* residual: div(a grad G) = 0 tested weakly against smooth compactly
  supported bumps; refining the chart must shrink the residual at
  empirical order >= 1.  Inverting a (the reciprocal orientation) breaks
  the divergence structure, so its residuals must not decay; that run is
  the suite's negative control.
* measure comparison: solved boundary masses per square against 4^-m.
* scaling: gamma^(k+1) <= G <= gamma^k on generation-k annuli, plus the
  log G vs log dist regression slope.
* symmetry and gluing: dihedral orbits agree and values match across the
  gluing circles.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .field import CoefficientField
from .geometry import GeometryError, dihedral_orbit
from .kernels import EXTERIOR, UNRESOLVED
from .solver import MeasureEstimate

# One block so refinement studies can tighten everything uniformly.
THRESHOLDS = {
    "generation_ratio": 1e-12,   # relative gap between gen-1 and gen-3 spreads
    "residual_finest": 1e-3,
    "residual_order": 1.0,
    "residual_exact": 1e-10,     # closed-form harmonic regions
    "orbit_G": 1e-12,
    "gluing_G": 1e-12,
    "gluing_a": 1e-9,
    "slope_tol": 0.05,
    "gen1_mass_tol": 0.01,       # relative, against 1/4
    "measure_spread": 1.25,      # max/min of renormalized generation-2 ratios
    "measure_drift": 0.10,
}


@dataclass
class CheckReport:
    """One named check: what was measured, against what, and the verdict."""

    name: str
    params: dict
    values: dict
    threshold: dict
    passed: bool
    series: Optional[list] = None

    def to_dict(self) -> dict:
        return _plain(
            {
                "name": self.name,
                "params": self.params,
                "values": self.values,
                "threshold": self.threshold,
                "passed": self.passed,
                "series": self.series,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _plain(obj):
    """Recursively strip numpy types so json.dumps round-trips."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


# -- sampling helpers ------------------------------------------------------


def _sample_fundamental(field: CoefficientField, rng, n: int) -> np.ndarray:
    """n points of the generation-0 annulus, rejection from the unit disk."""
    out = np.empty((0, 2))
    while out.shape[0] < n:
        m = max(4096, 2 * (n - out.shape[0]))
        pts = rng.uniform(-1.0, 1.0, size=(m, 2))
        pts = pts[np.einsum("ij,ij->i", pts, pts) <= 1.0]
        c = field.classify(pts[:, 0], pts[:, 1])
        keep = (c.gen == 0) & (c.region != EXTERIOR)
        out = np.vstack([out, pts[keep]])
    return out[:n]


def _sample_resolved_disk(field: CoefficientField, rng, n: int) -> np.ndarray:
    """n resolved points of the closed unit disk (any generation)."""
    out = np.empty((0, 2))
    while out.shape[0] < n:
        m = max(4096, 2 * (n - out.shape[0]))
        pts = rng.uniform(-1.0, 1.0, size=(m, 2))
        pts = pts[np.einsum("ij,ij->i", pts, pts) <= 1.0]
        c = field.classify(pts[:, 0], pts[:, 1])
        out = np.vstack([out, pts[c.region != UNRESOLVED]])
    return out[:n]


def _sample_annuli(field: CoefficientField, rng, gen: int, n: int) -> np.ndarray:
    """n points spread over all generation-gen annuli via the similarity maps."""
    w = _sample_fundamental(field, rng, n)
    if gen == 0:
        return w
    tree = field.tree
    r = tree.nodes_at(gen)
    nodes = rng.integers(r.start, r.stop, size=n)
    out = np.empty((n, 2))
    for i in np.unique(nodes):
        m = nodes == i
        out[m] = tree.from_local(int(i), w[m])
    c = field.classify(out[:, 0], out[:, 1])
    # roundoff at annulus boundaries can push an image across a circle;
    # keep only points that landed in the intended generation
    return out[c.gen == gen]


def _generation_spread(field: CoefficientField, rng, n_pairs: int):
    """max/min of a over matched samples of generation-1 and -3 annuli.

    The same local points are pushed through the similarity maps of
    random nodes at both generations, so any spread difference is pure
    evaluator noise, not sampling variance.
    """
    w = _sample_fundamental(field, rng, n_pairs)
    tree = field.tree
    picks = []
    for gen in (1, 3):
        r = tree.nodes_at(gen)
        nodes = rng.integers(r.start, r.stop, size=n_pairs)
        z = np.empty((n_pairs, 2))
        for i in np.unique(nodes):
            m = nodes == i
            z[m] = tree.from_local(int(i), w[m])
        picks.append(z)
    z1, z3 = picks
    c1 = field.classify(z1[:, 0], z1[:, 1])
    c3 = field.classify(z3[:, 0], z3[:, 1])
    ok = (c1.gen == 1) & (c3.gen == 3)
    a1 = field.eval_a(z1[ok, 0], z1[ok, 1])
    a3 = field.eval_a(z3[ok, 0], z3[ok, 1])
    r1 = float(a1.max() / a1.min())
    r3 = float(a3.max() / a3.min())
    return r1, r3, int(ok.sum())


def _log_slope(dists: np.ndarray, values: np.ndarray, bins: int = 24) -> float:
    """Regression slope of log values vs log dists on binned means.

    Binning first removes the bounded multiplicative spread around the
    power law, which would otherwise bias a pointwise fit toward the
    densely sampled scales.
    """
    lx = np.log(dists)
    ly = np.log(values)
    edges = np.linspace(lx.min(), lx.max() * (1 - 1e-12), bins + 1)
    idx = np.clip(np.digitize(lx, edges) - 1, 0, bins - 1)
    mx, my = [], []
    for b in range(bins):
        m = idx == b
        if np.count_nonzero(m) >= 5:
            mx.append(lx[m].mean())
            my.append(ly[m].mean())
    if len(mx) < 3:
        raise GeometryError("too few occupied bins for a slope fit")
    return float(np.polyfit(mx, my, 1)[0])


def _dists_to_set(field: CoefficientField, pts: np.ndarray) -> np.ndarray:
    return np.array([field.tree.dist_to_set(p) for p in pts])


# -- checks ----------------------------------------------------------------


def check_ellipticity(
    field: CoefficientField, n_samples: int = 100_000, seed: int = 5
) -> CheckReport:
    """Bounds on a, plus spread equality between generations 1 and 3.

    Samples the resolved part of the unit disk and an exterior annulus.
    For power-law variants the coefficient is unbounded near the set, so
    the reported extremes describe the sample, not the field; the
    generation comparison is the structural claim and stays exact.
    """
    rng = np.random.default_rng(seed)
    n_ext = n_samples // 5
    n_int = n_samples - n_ext

    pts = _sample_resolved_disk(field, rng, n_int)
    a_int = field.eval_a(pts[:, 0], pts[:, 1])

    r = np.sqrt(rng.uniform(1.0, 2.5 ** 2, size=n_ext))
    th = rng.uniform(0.0, 2.0 * np.pi, size=n_ext)
    a_ext = field.eval_a(r * np.cos(th), r * np.sin(th))

    a_all = np.concatenate([a_int, a_ext])
    a_min = float(a_all.min())
    a_max = float(a_all.max())
    ratio = a_max / a_min

    r1, r3, n_matched = _generation_spread(field, rng, n_samples // 4)
    gen_gap = abs(r1 / r3 - 1.0)

    values = {
        "a_min": a_min,
        "a_max": a_max,
        "ratio": ratio,
        "spread_gen1": r1,
        "spread_gen3": r3,
        "generation_gap": gen_gap,
        "n_matched": n_matched,
    }
    passed = (
        a_min > 0.0
        and math.isfinite(ratio)
        and gen_gap <= THRESHOLDS["generation_ratio"]
    )
    if field.alpha == 1.0 and not field.reciprocal:
        # collars and exterior pin a to exact constants; the exterior is 1
        values["a_exterior_min"] = float(a_ext.min())
        values["a_exterior_max"] = float(a_ext.max())
        passed = passed and a_ext.min() == 1.0 and a_ext.max() == 1.0
    if field.alpha != 1.0:
        # the coefficient trades a power of the level for divergence form,
        # so a ~ dist^(1 - alpha); the printed exponent alpha - 1 is kept
        # as the expectation and the regression reports what the field does
        samples = np.vstack(
            [_sample_annuli(field, rng, g, 800) for g in range(5)]
        )
        d = _dists_to_set(field, samples)
        av = field.eval_a(samples[:, 0], samples[:, 1])
        slope = _log_slope(d, av)
        expected = field.alpha - 1.0
        values["a_slope"] = slope
        values["a_slope_expected"] = expected
        passed = passed and abs(slope - expected) <= THRESHOLDS["slope_tol"]

    return CheckReport(
        name="ellipticity",
        params={"n_samples": n_samples, "seed": seed, "alpha": field.alpha},
        values=values,
        threshold={
            "generation_ratio": THRESHOLDS["generation_ratio"],
            "slope_tol": THRESHOLDS["slope_tol"],
        },
        passed=bool(passed),
    )


# -- weak residual ----------------------------------------------------------


def _gauss_cells(cx: float, cy: float, r: float, cells: int, order: int):
    """Composite tensor Gauss-Legendre rule on the support square."""
    x1, w1 = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(-r, r, cells + 1)
    half = 0.5 * (edges[1] - edges[0])
    mids = 0.5 * (edges[1:] + edges[:-1])
    xs = (mids[:, None] + half * x1[None, :]).ravel()
    ws = np.tile(half * w1, cells)
    px, py = np.meshgrid(cx + xs, cy + xs, indexing="ij")
    return px.ravel(), py.ravel(), np.outer(ws, ws).ravel()


def _bump_grad(px, py, cx, cy, r):
    """Gradient of exp(1 - 1/(1 - u^2)), u = |z - c|/r, zero outside."""
    dx = px - cx
    dy = py - cy
    u2 = (dx * dx + dy * dy) / (r * r)
    act = u2 < 1.0 - 1e-12
    gx = np.zeros_like(u2)
    gy = np.zeros_like(u2)
    t = 1.0 - u2[act]
    f = -2.0 * np.exp(1.0 - 1.0 / t) / (r * r * t * t)
    gx[act] = f * dx[act]
    gy[act] = f * dy[act]
    return gx, gy, act


def _admissible(field: CoefficientField, cx, cy, r, cells, order) -> bool:
    px, py, _ = _gauss_cells(cx, cy, r, cells, order)
    return not np.any(field.classify(px, py).region == UNRESOLVED)


def _place_bumps(field, region, n_bumps, rng, cells, order):
    """Seeded bump supports, rejected until every quadrature node resolves."""
    tree = field.tree
    lam = field.lam

    def bulk(gen: int):
        for _ in range(400):
            ang = rng.uniform(0.0, 2.0 * np.pi)
            rad = rng.uniform(0.40, 0.80)
            rr = rng.uniform(0.07, 0.13)
            cx, cy = rad * math.cos(ang), rad * math.sin(ang)
            if gen:
                nr = tree.nodes_at(gen)
                i = int(rng.integers(nr.start, nr.stop))
                cx, cy = tree.from_local(i, np.array([cx, cy]))
                rr *= lam ** gen
            if _admissible(field, cx, cy, rr, cells, order):
                return (float(cx), float(cy), float(rr), f"bulk{gen}")
        raise GeometryError("no resolved bump placement found")

    def straddle(gen: int):
        for _ in range(400):
            nr = tree.nodes_at(gen)
            i = int(rng.integers(nr.start, nr.stop))
            ang = rng.uniform(0.0, 2.0 * np.pi)
            rk = lam ** gen
            cx = tree.centers[i, 0] + rk * math.cos(ang)
            cy = tree.centers[i, 1] + rk * math.sin(ang)
            rr = rk * rng.uniform(0.28, 0.42)
            if _admissible(field, cx, cy, rr, cells, order):
                return (float(cx), float(cy), float(rr), f"straddle{gen}")
        raise GeometryError("no resolved straddling bump found")

    def collar():
        ang = rng.uniform(0.0, 2.0 * np.pi)
        rr = rng.uniform(0.030, 0.048)
        return (1.02 * math.cos(ang), 1.02 * math.sin(ang), rr, "collar")

    if region == "collar":
        return [collar() for _ in range(n_bumps)]
    if region == "bulk":
        return [bulk(0) for _ in range(n_bumps)]
    if region == "straddle":
        return [straddle(1 + (j % 2)) for j in range(n_bumps)]
    if region == "mixed":
        specs = [bulk(0) for _ in range(max(0, n_bumps - 10))]
        specs += [bulk(1) for _ in range(4)]
        specs += [straddle(1) for _ in range(3)]
        specs += [straddle(2) for _ in range(2)]
        specs += [collar()]
        return specs[:n_bumps]
    raise GeometryError(f"unknown bump region {region!r}")


def _bump_residual(field, spec, cells, order) -> float:
    cx, cy, r, _ = spec
    px, py, wt = _gauss_cells(cx, cy, r, cells, order)
    gx, gy, act = _bump_grad(px, py, cx, cy, r)
    _, a, grad = field.evaluate(px[act], py[act], want_grad=True)
    w = wt[act]
    num = np.sum(w * a * (grad.real * gx[act] + grad.imag * gy[act]))
    den = np.sum(w * a * np.abs(grad) * np.hypot(gx[act], gy[act]))
    return float(abs(num) / den)


def check_residual(
    field: CoefficientField,
    region: str = "mixed",
    refinements: Optional[Sequence[CoefficientField]] = None,
    n_bumps: int = 20,
    seed: int = 11,
    cells: int = 6,
    order: int = 12,
) -> CheckReport:
    """Weak residuals of div(a grad G) against smooth bumps.

    refinements, coarse to fine, all share the tree of `field`; when
    omitted the check runs at the single given resolution.  Bump
    placement uses the finest level and is identical across levels, so
    the series isolates chart resolution.  The pass rule needs the
    finest maximum under the threshold, and decay order >= 1 once three
    levels are present; supports confined to closed-form regions
    (region="collar") must sit at quadrature accuracy instead.
    """
    fields = list(refinements) if refinements is not None else [field]
    rng = np.random.default_rng(seed)
    specs = _place_bumps(fields[-1], region, n_bumps, rng, cells, order)

    series = []
    means = []
    for fld in fields:
        res = np.array([_bump_residual(fld, s, cells, order) for s in specs])
        series.append(float(res.max()))
        means.append(float(res.mean()))

    emp_order = None
    if len(series) >= 2:
        steps = [
            math.log2(series[i] / series[i + 1]) for i in range(len(series) - 1)
        ]
        emp_order = float(np.mean(steps))

    finest = series[-1]
    thr = THRESHOLDS["residual_exact" if region == "collar" else "residual_finest"]
    passed = finest < thr
    if len(series) >= 3:
        passed = passed and emp_order >= THRESHOLDS["residual_order"]

    grids = [
        (f.chart.params.n_s, f.chart.params.n_t) for f in fields
    ]
    return CheckReport(
        name="residual",
        params={
            "region": region,
            "n_bumps": len(specs),
            "seed": seed,
            "cells": cells,
            "order": order,
            "grids": grids,
            "reciprocal": field.reciprocal,
        },
        values={
            "finest_max": finest,
            "finest_mean": means[-1],
            "means": means,
            "order": emp_order,
            "bumps": [list(s) for s in specs],
        },
        threshold={
            "finest": thr,
            "order": THRESHOLDS["residual_order"] if len(series) >= 3 else None,
        },
        passed=bool(passed),
        series=series,
    )


# -- measure comparison ------------------------------------------------------


def compare_measures(
    estimate: MeasureEstimate,
    tree=None,
    ratio_bound: Optional[float] = None,
    gen1_tol: Optional[float] = None,
) -> CheckReport:
    """Renormalized per-square masses against the invariant weights.

    Generation 1 is judged by symmetry (each square carries 1/4);
    deeper generations by the max/min spread of mass over 4^-m after
    renormalizing to unit total.
    """
    if tree is not None and len(estimate.nodes) != 4 ** estimate.generation:
        raise GeometryError(
            f"estimate covers {len(estimate.nodes)} squares, expected "
            f"{4 ** estimate.generation}"
        )
    ratios = np.asarray(estimate.ratios, dtype=float)
    spread = float(ratios.max() / ratios.min())
    values = {
        "generation": estimate.generation,
        "n": estimate.n,
        "mask_depth": estimate.mask_depth,
        "total_mass": float(estimate.total_mass),
        "ratios": ratios,
        "spread": spread,
    }
    if estimate.generation == 1:
        tol = THRESHOLDS["gen1_mass_tol"] if gen1_tol is None else gen1_tol
        renorm = np.asarray(estimate.masses, dtype=float) / estimate.total_mass
        dev = float(np.abs(renorm / 0.25 - 1.0).max())
        values["renormalized"] = renorm
        values["max_relative_deviation"] = dev
        passed = dev <= tol
        threshold = {"gen1_mass_tol": tol}
    else:
        bound = THRESHOLDS["measure_spread"] if ratio_bound is None else ratio_bound
        passed = spread < bound
        threshold = {"measure_spread": bound}
    return CheckReport(
        name="measure",
        params={
            "generation": estimate.generation,
            "n": estimate.n,
            "mask_depth": estimate.mask_depth,
            "tol": estimate.tol,
        },
        values=values,
        threshold=threshold,
        passed=bool(passed),
    )


def spread_drift(a: MeasureEstimate, b: MeasureEstimate) -> float:
    """Relative change of the ratio spread between two estimates."""
    ra = np.asarray(a.ratios)
    rb = np.asarray(b.ratios)
    sa = float(ra.max() / ra.min())
    sb = float(rb.max() / rb.min())
    return abs(sa / sb - 1.0)


# -- scaling ------------------------------------------------------------------


def check_scaling(
    field: CoefficientField,
    n_per_gen: int = 2000,
    gens: Sequence[int] = (0, 1, 2, 3, 4),
    seed: int = 7,
    slope_per_gen: int = 600,
) -> CheckReport:
    """Per-annulus bracketing of G and the distance power law.

    On a generation-k annulus the level satisfies g^(k+1) <= G <= g^k for
    g = gamma^alpha, with no tolerance: descent multiplies by exact
    powers and the chart never leaves the closed interval [g, 1] at
    alpha = 1.  The regression slope of log G against log dist must be
    alpha log gamma / log lam within the slope tolerance.
    """
    rng = np.random.default_rng(seed)
    g = field.gamma ** field.alpha
    violations = 0
    per_gen = {}
    slope_pts = []
    n_total = 0
    for k in gens:
        pts = _sample_annuli(field, rng, k, n_per_gen)
        G = field.eval_G(pts[:, 0], pts[:, 1])
        n_total += G.size
        violations += int(np.count_nonzero((G < g ** (k + 1)) | (G > g ** k)))
        per_gen[str(k)] = [float(G.min()), float(G.max())]
        take = min(slope_per_gen, pts.shape[0])
        slope_pts.append(pts[:take])
    samples = np.vstack(slope_pts)
    d = _dists_to_set(field, samples)
    Gs = field.eval_G(samples[:, 0], samples[:, 1])
    slope = _log_slope(d, Gs)
    expected = field.alpha * math.log(field.gamma) / math.log(field.lam)

    passed = violations == 0 and abs(slope - expected) <= THRESHOLDS["slope_tol"]
    return CheckReport(
        name="scaling",
        params={
            "n_per_gen": n_per_gen,
            "gens": list(gens),
            "seed": seed,
            "lam": field.lam,
            "gamma": field.gamma,
            "alpha": field.alpha,
        },
        values={
            "violations": violations,
            "n_total": n_total,
            "per_gen_range": per_gen,
            "slope": slope,
            "slope_expected": expected,
        },
        threshold={"violations": 0, "slope_tol": THRESHOLDS["slope_tol"]},
        passed=bool(passed),
    )


# -- symmetry and gluing -------------------------------------------------------


def check_symmetry_and_gluing(
    field: CoefficientField,
    n_points: int = 100,
    n_angles: int = 50,
    delta: float = 2.5e-13,
    seed: int = 3,
) -> CheckReport:
    """Dihedral orbit agreement plus continuity across gluing circles.

    Straddling pairs sit delta inside and outside every generation-1 and
    generation-2 circle.  Per-square rotations keep the gluing exact but
    break the global eightfold symmetry below the fundamental annulus,
    so for rotated trees the orbit test samples generation 0 and the
    exterior only.
    """
    rng = np.random.default_rng(seed)
    rotated = field.tree.params.rotations is not None
    if rotated:
        pts = _sample_fundamental(field, rng, n_points)
    else:
        pts = _sample_resolved_disk(field, rng, n_points)
    ext = n_points // 5
    r = np.sqrt(rng.uniform(1.0, 4.0, size=ext))
    th = rng.uniform(0.0, 2.0 * np.pi, size=ext)
    pts = np.vstack([pts, np.column_stack([r * np.cos(th), r * np.sin(th)])])

    orbit_dev = 0.0
    for x, y in pts:
        orb = dihedral_orbit(float(x), float(y))
        G = field.eval_G(orb[:, 0], orb[:, 1])
        orbit_dev = max(orbit_dev, float(np.ptp(G)))

    lam = field.lam
    g_jump = 0.0
    a_jump = 0.0
    a_dev = 0.0
    ang = (np.arange(n_angles) + 0.5) * (2.0 * np.pi / n_angles)
    ux, uy = np.cos(ang), np.sin(ang)
    for k in (1, 2):
        rk = lam ** k
        # collar value on either side of a generation-k circle
        const = (4.0 * field.gamma) ** -float(k + 1)
        for i in field.tree.nodes_at(k):
            cx, cy = field.tree.centers[i]
            xo = cx + rk * (1.0 + delta) * ux
            yo = cy + rk * (1.0 + delta) * uy
            xi = cx + rk * (1.0 - delta) * ux
            yi = cy + rk * (1.0 - delta) * uy
            Go, ao = field.evaluate(xo, yo)
            Gi, ai = field.evaluate(xi, yi)
            g_jump = max(g_jump, float(np.abs(Go - Gi).max()))
            a_jump = max(a_jump, float(np.abs(ao - ai).max()))
            if field.alpha == 1.0 and not field.reciprocal:
                a_dev = max(
                    a_dev,
                    float(np.abs(ao - const).max()),
                    float(np.abs(ai - const).max()),
                )

    values = {
        "orbit_dev": orbit_dev,
        "g_jump": g_jump,
        "a_jump": a_jump,
        "orbit_restricted": rotated,
    }
    passed = (
        orbit_dev <= THRESHOLDS["orbit_G"]
        and g_jump <= THRESHOLDS["gluing_G"]
        and a_jump <= THRESHOLDS["gluing_a"]
    )
    if field.alpha == 1.0 and not field.reciprocal:
        values["a_collar_dev"] = a_dev
        passed = passed and a_dev <= THRESHOLDS["gluing_a"]

    return CheckReport(
        name="symmetry_gluing",
        params={
            "n_points": n_points,
            "n_angles": n_angles,
            "delta": delta,
            "seed": seed,
            "rotated": rotated,
        },
        values=values,
        threshold={
            "orbit_G": THRESHOLDS["orbit_G"],
            "gluing_G": THRESHOLDS["gluing_G"],
            "gluing_a": THRESHOLDS["gluing_a"],
        },
        passed=bool(passed),
    )


# -- report plumbing -----------------------------------------------------------


def summarize(reports: Sequence[CheckReport]) -> str:
    """Markdown table over all reports, one row per check."""
    lines = [
        "| check | status | measured |",
        "| --- | --- | --- |",
    ]
    for rep in reports:
        scalars = []
        for key in sorted(rep.values):
            val = rep.values[key]
            if isinstance(val, bool):
                scalars.append(f"{key}={val}")
            elif isinstance(val, (int, np.integer)):
                scalars.append(f"{key}={int(val)}")
            elif isinstance(val, (float, np.floating)):
                scalars.append(f"{key}={float(val):.6g}")
        status = "pass" if rep.passed else "FAIL"
        lines.append(f"| {rep.name} | {status} | {', '.join(scalars)} |")
    return "\n".join(lines) + "\n"


def write_reports(reports: Sequence[CheckReport], directory) -> int:
    """One JSON per check plus summary.md; returns the CI exit code."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for rep in reports:
        (directory / f"{rep.name}.json").write_text(rep.to_json())
    (directory / "summary.md").write_text(summarize(reports))
    return 0 if all(r.passed for r in reports) else 1
