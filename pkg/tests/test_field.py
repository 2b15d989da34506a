"""Whole-plane coefficient field: routing, exact seams, variants."""

import numpy as np
import pytest

from cantorfield.field import (
    BULK,
    EXTERIOR,
    INNER,
    OUTER,
    UNRESOLVED,
    ZONE,
    CoefficientField,
    make_variant,
)
from cantorfield.geometry import GeometryError, dihedral_orbit


def test_region_routing_covers_all_codes(field):
    rng = np.random.default_rng(11)
    x = rng.uniform(-1.4, 1.4, 30000)
    y = rng.uniform(-1.4, 1.4, 30000)
    c = field.classify(x, y)
    counts = np.bincount(c.region, minlength=6)
    assert counts[EXTERIOR] > 0 and counts[BULK] > 0
    assert counts[OUTER] > 0 and counts[INNER] > 0 and counts[ZONE] > 0
    assert counts[UNRESOLVED] > 0
    # exterior points carry no node, annulus points carry the node's depth
    assert np.all(c.node[c.region == EXTERIOR] == -1)
    assert np.all(c.gen[c.region != EXTERIOR] >= 0)


def test_exterior_matches_closed_form(field):
    r = np.array([1.0 + 1e-12, 1.3, 2.0, 2.5])
    th = np.array([0.1, 2.0, -2.7, 4.0])
    x, y = r * np.cos(th), r * np.sin(th)
    assert np.allclose(field.eval_G(x, y), 1 + np.log(r), rtol=0, atol=1e-12)
    assert np.allclose(field.eval_a(x, y), 1.0, rtol=0, atol=1e-15)
    g = field.grad_G_native(x, y)
    z = x + 1j * y
    assert np.max(np.abs(g - z / r**2)) < 1e-12


def test_collar_value_spec_point(field):
    # on the positive axis just inside the outer rim
    G = field.eval_G(np.array([0.97]), np.array([0.0]))
    a = field.eval_a(np.array([0.97]), np.array([0.0]))
    assert abs(G[0] - (1 + np.log(0.97))) < 1e-12
    assert abs(a[0] - 1.0) < 1e-12


def test_gradient_magnitudes_on_circles(field):
    th = np.linspace(0.0, 2 * np.pi, 9)[:-1]
    for r, mag in [(2.0, 0.5), (1.0 + 1e-9, 1.0)]:
        g = field.grad_G_native(r * np.cos(th), r * np.sin(th))
        assert np.max(np.abs(np.abs(g) - mag)) < 1e-8


def test_gluing_circles_are_seamless(field):
    """Value and coefficient agree across disk boundaries at two depths."""
    th = np.linspace(0.0, 2 * np.pi, 41)[:-1]
    tree = field.tree
    lam = field.lam
    for gen, node in [(1, 1), (2, 6)]:
        cx, cy = tree.centers[node]
        radius = lam ** int(tree.generation[node])
        want = field.gamma ** int(tree.generation[node])
        for eps in (1 - 1e-9, 1 + 1e-9):
            x = cx + radius * eps * np.cos(th)
            y = cy + radius * eps * np.sin(th)
            G, a = field.eval_G(x, y), field.eval_a(x, y)
            assert np.max(np.abs(G - want)) < 1e-7
            assert np.max(np.abs(a - 1.0)) < 1e-7


def test_gluing_gradient_is_seamless(field):
    th = np.linspace(0.0, 2 * np.pi, 17)[:-1]
    tree = field.tree
    cx, cy = tree.centers[1]
    for eps in (1e-9,):
        zo = (cx + 1j * cy) + 0.25 * (1 + eps) * np.exp(1j * th)
        zi = (cx + 1j * cy) + 0.25 * (1 - eps) * np.exp(1j * th)
        go = field.grad_G_native(zo.real, zo.imag)
        gi = field.grad_G_native(zi.real, zi.imag)
        assert np.max(np.abs(go - gi)) < 1e-6


def test_dihedral_symmetry(field):
    rng = np.random.default_rng(5)
    pts = rng.uniform(0.05, 1.3, (40, 2))
    for x0, y0 in pts:
        orb = dihedral_orbit(x0, y0)
        c = field.classify(orb[:, 0], orb[:, 1])
        if np.any(c.region == UNRESOLVED):
            continue
        G = field.eval_G(orb[:, 0], orb[:, 1])
        a = field.eval_a(orb[:, 0], orb[:, 1])
        assert np.ptp(G) < 1e-12
        assert np.ptp(a) < 1e-12


def test_coefficient_recursion_between_annuli(field):
    """a is invariant under the square contractions; G scales by gamma."""
    rng = np.random.default_rng(17)
    tree = field.tree
    gen2 = np.flatnonzero(tree.generation == 2)
    n = 100
    w = np.empty((n, 2))
    have = 0
    while have < n:
        cand = rng.uniform(-1, 1, (4 * n, 2))
        r = np.hypot(cand[:, 0], cand[:, 1])
        keep = (r < 0.98) & (r > 0.05)
        c = field.classify(cand[keep, 0], cand[keep, 1])
        ok = np.flatnonzero((c.gen == 0) & (c.region != UNRESOLVED))
        take = min(n - have, ok.size)
        w[have : have + take] = cand[keep][ok[:take]]
        have += take
    nodes = rng.choice(gen2, size=n)
    children = 4 * nodes + rng.integers(1, 5, size=n)
    z2 = np.array([tree.from_local(q, wi) for q, wi in zip(nodes, w)])
    z3 = np.array([tree.from_local(q, wi) for q, wi in zip(children, w)])
    a2 = field.eval_a(z2[:, 0], z2[:, 1])
    a3 = field.eval_a(z3[:, 0], z3[:, 1])
    # recovered local coordinates differ by ulps; the steep cells near the
    # origin zone amplify that through the interpolant's slope
    assert np.max(np.abs(a3 - a2) / np.abs(a2)) < 5e-12
    G2 = field.eval_G(z2[:, 0], z2[:, 1])
    G3 = field.eval_G(z3[:, 0], z3[:, 1])
    assert np.max(np.abs(G3 - field.gamma * G2)) < 1e-13


def test_unresolved_point_raises(field):
    z1 = field.chart.params.z1
    # the fixed point of the repeated ++ contraction lies in every disk
    fx = z1.real / (1 - field.lam)
    with pytest.raises(GeometryError, match="increase depth"):
        field.eval_G(np.array([fx]), np.array([fx]))


def test_fd_gradient_probes(field):
    rng = np.random.default_rng(23)
    x = rng.uniform(-1.3, 1.3, 600)
    y = rng.uniform(-1.3, 1.3, 600)
    c = field.classify(x, y)
    keep = c.region != UNRESOLVED
    x, y, reg = x[keep], y[keep], c.region[keep]
    gn = field.grad_G_native(x, y)
    gf = field.eval_grad_G(x, y)
    rel = np.abs(gn - gf) / np.maximum(np.abs(gn), 1e-12)
    formula = reg != BULK
    assert np.max(rel[formula]) < 1e-7
    # in the bulk the probe differentiates the bilinear patch, so the gap
    # is the patch-gradient error, largest in the fan cells below the hole
    assert np.median(rel[~formula]) < 0.15
    assert np.percentile(rel[~formula], 90) < 0.5


def test_fd_gradient_second_order_in_formula_regions(field):
    x = np.array([1.7, 0.98 * np.cos(0.3)])
    y = np.array([0.4, 0.98 * np.sin(0.3)])
    gn = field.grad_G_native(x, y)
    e1 = np.abs(field.eval_grad_G(x, y, step=1e-3) - gn)
    e2 = np.abs(field.eval_grad_G(x, y, step=5e-4) - gn)
    assert np.all(e2 < e1 * 0.3 + 1e-13)


def test_power_variant_algebra(field):
    fp = make_variant(field, "power", alpha=2.0)
    x = np.array([2.0, 0.97, 0.6133])
    y = np.array([0.0, 0.0, 0.2718])
    G, a = field.eval_G(x, y), field.eval_a(x, y)
    Gp, ap = fp.eval_G(x, y), fp.eval_a(x, y)
    assert np.max(np.abs(Gp - G**2)) < 1e-12
    assert np.max(np.abs(ap - a / (2 * G))) < 1e-12
    # the replacement keeps the same flux field: a~ grad G~ = a grad G
    gp = fp.grad_G_native(x, y)
    g = field.grad_G_native(x, y)
    assert np.max(np.abs(ap * gp - a * g)) < 1e-12


def test_power_alpha_one_is_identity(field):
    f1 = make_variant(field, "power", alpha=1.0)
    rng = np.random.default_rng(2)
    x = rng.uniform(-1.2, 1.2, 50)
    y = rng.uniform(-1.2, 1.2, 50)
    c = field.classify(x, y)
    keep = c.region != UNRESOLVED
    x, y = x[keep], y[keep]
    assert np.array_equal(f1.eval_G(x, y), field.eval_G(x, y))
    assert np.array_equal(f1.eval_a(x, y), field.eval_a(x, y))


def test_dimension_variant_geometry(dim_field):
    assert abs(dim_field.lam - 1 / 3) < 1e-15
    assert abs(dim_field.gamma - 0.25) < 1e-15
    # exterior unchanged, gluing values still powers of gamma
    assert abs(dim_field.eval_G(np.array([2.0]), np.array([0.0]))[0] - (1 + np.log(2))) < 1e-12
    tree = dim_field.tree
    cx, cy = tree.centers[1]
    th = np.linspace(0, 2 * np.pi, 13)[:-1]
    for eps in (1 - 1e-9, 1 + 1e-9):
        x = cx + (1 / 3) * eps * np.cos(th)
        y = cy + (1 / 3) * eps * np.sin(th)
        assert np.max(np.abs(dim_field.eval_G(x, y) - 0.25)) < 1e-7
        assert np.max(np.abs(dim_field.eval_a(x, y) - 1.0)) < 1e-7


def test_rotated_variant_breaks_symmetry(field):
    fr = make_variant(field, "rotated", seed=7)
    # exterior agrees, the deeper annuli differ from the aligned tree
    assert abs(fr.eval_G(np.array([2.0]), np.array([0.0]))[0] - (1 + np.log(2))) < 1e-14
    rng = np.random.default_rng(31)
    x = rng.uniform(-0.9, 0.9, 800)
    y = rng.uniform(-0.9, 0.9, 800)
    cb = field.classify(x, y)
    cr = fr.classify(x, y)
    keep = (cb.region != UNRESOLVED) & (cr.region != UNRESOLVED)
    keep &= (cb.gen > 0) | (cr.gen > 0)
    Gb = field.eval_G(x[keep], y[keep])
    Gr = fr.eval_G(x[keep], y[keep])
    assert np.max(np.abs(Gb - Gr)) > 1e-3
