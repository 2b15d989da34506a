"""Square hierarchy: construction, location, measure, distances, symmetry."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cantorfield.geometry import (
    CORNER_SIGNS,
    CantorTree,
    GeometryError,
    GeometryParams,
    build_tree,
    corner_offset,
    dihedral_orbit,
    fold_to_sector,
    lambda_max,
)


@pytest.fixture(scope="module")
def tree() -> CantorTree:
    return build_tree(GeometryParams(lam=0.25, depth=4))


def test_generation1_centers_standard(tree):
    # Frozen: the four generation-1 squares sit at (+-7/16, +-7/16).
    got = sorted(map(tuple, tree.centers[1:5]))
    want = sorted([(7 / 16, 7 / 16), (-7 / 16, 7 / 16), (-7 / 16, -7 / 16), (7 / 16, -7 / 16)])
    assert np.allclose(got, want, atol=0, rtol=0)


def test_generation3_count_and_side(tree):
    nodes = list(tree.nodes_at(3))
    assert len(nodes) == 64
    assert all(tree.side(i) == pytest.approx(1 / 64, abs=0) for i in nodes)


def test_lambda_max_value():
    # The open-quadrant constraint o(lam) = lam binds first: lam_max = 2/5.
    assert abs(lambda_max() - 0.4) < 1e-9


def test_inadmissible_ratio_rejected():
    with pytest.raises(GeometryError, match="lambda_max"):
        GeometryParams(lam=0.6, depth=1)
    # Just above the bound is still rejected, just below passes.
    with pytest.raises(GeometryError):
        GeometryParams(lam=0.401, depth=1)
    GeometryParams(lam=0.399, depth=1)
    GeometryParams(lam=1 / 3, depth=1)


def test_measure_is_four_adic(tree):
    for gen in range(5):
        masses = [tree.invariant_measure(i) for i in tree.nodes_at(gen)]
        assert all(m == 4.0 ** (-gen) for m in masses)
        assert math.fsum(masses) == pytest.approx(1.0, abs=1e-15)


def test_locate_root_annulus(tree):
    res = tree.locate((0.9, 0.0))
    assert res.kind == "annulus" and res.node == 0
    assert np.allclose(res.local, [0.9, 0.0])


def test_locate_first_quadrant_child(tree):
    # Frozen: F_Q1((0.45, 0.45)) = 4 (z - (7/16, 7/16)) = (0.05, 0.05).
    res = tree.locate((0.45, 0.45))
    assert res.kind == "annulus" and res.node == 1
    assert np.allclose(res.local, [0.05, 0.05], atol=1e-12)


def test_locate_exterior_and_unresolved(tree):
    assert tree.locate((1.2, 0.3)).kind == "exterior"
    # The corner fixed point of the (+,+) branch stays inside every disk.
    ofs = corner_offset(0.25)
    fp = ofs / (1 - 0.25)
    assert tree.locate((fp, fp)).kind == "unresolved"


def _in_standard_annulus(local: np.ndarray, lam: float) -> bool:
    # Oracle for membership in A0: inside the unit disk, outside the four
    # generation-1 disks at the standard positions.
    if local[0] ** 2 + local[1] ** 2 > 1.0:
        return False
    o = corner_offset(lam)
    for sx, sy in CORNER_SIGNS:
        if (local[0] - o * sx) ** 2 + (local[1] - o * sy) ** 2 < lam * lam:
            return False
    return True


def test_locate_partition_property(tree):
    rng = np.random.default_rng(42)
    n_checked = 0
    while n_checked < 2000:
        z = rng.uniform(-1, 1, size=2)
        if z[0] ** 2 + z[1] ** 2 > 1.0:
            continue
        res = tree.locate(z)
        if res.kind != "annulus":
            continue
        assert _in_standard_annulus(res.local, 0.25), (z, res)
        n_checked += 1


def test_similarity_round_trip(tree):
    rng = np.random.default_rng(7)
    for i in [0, 1, 6, 21, 85]:
        z = rng.uniform(-1, 1, size=(10, 2))
        back = tree.from_local(i, tree.to_local(i, z))
        assert np.max(np.abs(back - z)) < 1e-14


def test_dist_to_set_center_oracle(tree):
    # Frozen: from the origin, the nearest generation-1 square corner is
    # (5/16, 5/16), at distance (5/16) sqrt(2).
    assert tree.dist_to_set((0.0, 0.0), gen=1) == pytest.approx(5 / 16 * math.sqrt(2), abs=1e-14)


def test_dist_to_set_matches_brute_force(tree):
    rng = np.random.default_rng(3)

    def brute(z, gen):
        return min(tree._dist_to_square(i, z[0], z[1]) for i in tree.nodes_at(gen))

    for _ in range(50):
        z = rng.uniform(-1.2, 1.2, size=2)
        for gen in (1, 2, 3):
            assert tree.dist_to_set(z, gen) == pytest.approx(brute(z, gen), abs=1e-12)


def test_centers_dihedral_invariant(tree):
    pts = tree.centers[list(tree.nodes_at(2))]
    key = {tuple(np.round(p, 12)) for p in pts}
    for p in pts:
        for q in dihedral_orbit(p[0], p[1]):
            assert tuple(np.round(q, 12)) in key


def test_rotated_tree_deterministic_and_contained():
    p = GeometryParams(lam=0.25, depth=3, rotations="random", rotation_seed=7)
    t1, t2 = build_tree(p), build_tree(p)
    assert np.array_equal(t1.centers, t2.centers) and np.array_equal(t1.angle, t2.angle)
    t3 = build_tree(GeometryParams(lam=0.25, depth=3, rotations="random", rotation_seed=8))
    assert not np.array_equal(t1.angle, t3.angle)
    # Child disks stay inside the parent disk for any rotation.
    for i in range(t1.n_nodes):
        for c in t1.children(i):
            d = math.hypot(*(t1.centers[c] - t1.centers[i]))
            assert d + t1.ball_radius(c) <= t1.ball_radius(i) + 1e-12


def test_rotation_angle_list_cycled():
    t = build_tree(GeometryParams(lam=0.25, depth=2, rotations=[0.1, -0.2]))
    rel = np.resize([0.1, -0.2], t.n_nodes - 1)
    for i in range(1, t.n_nodes):
        assert t.angle[i] == pytest.approx(t.angle[t.parent(i)] + rel[i - 1])


@given(st.floats(-2, 2), st.floats(-2, 2))
@settings(max_examples=200, deadline=None)
def test_fold_orbit_collapses(x, y):
    fx, fy = fold_to_sector(x, y)
    assert fx >= fy >= 0.0
    for q in dihedral_orbit(x, y):
        assert fold_to_sector(q[0], q[1]) == (fx, fy)


def test_squares_csv_round_trip(tree, tmp_path):
    path = tmp_path / "gen2.csv"
    tree.write_squares_csv(str(path), gen=2)
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "node,generation,cx,cy,side,angle,mu"
    assert len(rows) == 1 + 16
    first = rows[1].split(",")
    assert float(first[4]) == pytest.approx(1 / 16)
    assert float(first[6]) == pytest.approx(1 / 16)
