"""Finite-volume solver: exactness, masking, measure tables, validation.

Most cases run the constant-coefficient operator so nothing here waits
on a chart build; the co-normal check is the one field-backed test.
"""

import csv
import json
import math

import numpy as np
import pytest

from cantorfield.geometry import GeometryError, GeometryParams, build_tree
from cantorfield.solver import (
    DEFAULT_BOX,
    FAR_POLE,
    SolverError,
    discretize,
    elliptic_measure,
    green_normal_derivative,
    manufactured_annulus_error,
    sample_solution,
    solve,
    write_solution,
)


@pytest.fixture(scope="module")
def tree():
    return build_tree(GeometryParams(depth=3))


def _empty_mask_problem(n=96, data=(0.0, 0.0), box=(-1.0, 1.0)):
    cells = np.zeros((n, n), dtype=bool)
    return discretize(None, box=box, n=n, mask=("cells", cells), data=data)


def test_affine_data_is_discretely_exact():
    # the five-point operator annihilates affine functions and the
    # half-cell boundary faces reproduce them, so the solve is exact
    # up to conjugate-gradient tolerance
    def lin(x, y):
        return 0.3 * x - 1.7 * y + 0.25

    problem = _empty_mask_problem(data=(lin, lin))
    u = solve(problem, tol=1e-12)
    xs = problem.cell_centers()
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    assert float(np.max(np.abs(u - lin(gx, gy)))) < 1e-9
    pts = np.array([[0.123, -0.456], [-0.7, 0.7]])
    got = sample_solution(problem, u, pts)
    assert np.allclose(got, lin(pts[:, 0], pts[:, 1]), rtol=0, atol=1e-9)


def test_constant_data_solves_to_constant(tree):
    problem = discretize(None, n=128, mask=("squares", 1), tree=tree)
    b, rng = problem.rhs(1.0, 1.0)
    u = solve(problem, b=b, data_range=rng)
    live = ~problem.mask
    assert float(np.max(np.abs(u[live] - 1.0))) < 1e-8
    assert np.all(np.isnan(u[problem.mask]))


def test_maximum_principle_is_asserted(tree):
    problem = discretize(None, n=128, mask=("squares", 1), tree=tree)
    b, _ = problem.rhs(1.0, 0.0)
    with pytest.raises(SolverError, match="maximum principle"):
        solve(problem, b=b, data_range=(0.0, 0.2))


def test_square_mask_covers_and_labels(tree):
    n = 256
    problem = discretize(None, n=n, mask=("squares", 1), tree=tree)
    xs = problem.cell_centers()
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    side = tree.params.lam
    h = problem.h
    for nd in np.flatnonzero(tree.generation == 1):
        cx, cy = tree.centers[nd]
        inside = (np.abs(gx - cx) <= side / 2 - h) & (np.abs(gy - cy) <= side / 2 - h)
        assert np.all(problem.mask[inside])
        assert np.all(problem.owner[inside] == nd)
        clear = (np.abs(gx - cx) > side / 2 + h) | (np.abs(gy - cy) > side / 2 + h)
        assert not np.any(problem.owner[clear & problem.mask] == nd)
    # owners partition the masked cells
    assert np.all(problem.owner[problem.mask] >= 0)
    assert np.all(problem.owner[~problem.mask] == -1)


def test_indicator_masses_partition_unity(tree):
    # solutions of the per-square indicator problems sum to the solution
    # of the all-ones problem; evaluated at the pole this is the mass
    # partition identity
    problem = discretize(None, n=256, mask=("squares", 1), tree=tree)
    pole = np.array([FAR_POLE])
    total = 0.0
    for nd in np.flatnonzero(tree.generation == 1):
        b, _ = problem.rhs({int(nd): 1.0}, 0.0)
        u = solve(problem, b=b, data_range=(0.0, 1.0))
        total += float(sample_solution(problem, u, pole)[0])
    b, rng = problem.rhs(1.0, 0.0)
    u_all = solve(problem, b=b, data_range=rng)
    assert abs(total - float(sample_solution(problem, u_all, pole)[0])) < 1e-7


def test_measure_symmetry_forces_quarter_masses(tree):
    est = elliptic_measure(None, tree=tree, generation=1, n=256, mask_depth=2)
    assert est.nodes.size == 4
    assert float(np.ptp(est.ratios)) < 1e-6
    assert np.allclose(est.masses / est.total_mass, 0.25, rtol=0, atol=1e-7)
    # truncation deficit: some mass escapes to the outer box
    assert 0.0 < est.total_mass < 1.0


def test_measure_csv_layout(tree, tmp_path):
    est = elliptic_measure(None, tree=tree, generation=1, n=256, mask_depth=2)
    path = tmp_path / "m1.csv"
    est.write_csv(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["square", "k", "cx", "cy", "mass", "mu", "ratio"]
    assert len(rows) == 5
    ratios = np.array([float(r[6]) for r in rows[1:]])
    assert np.allclose(ratios, est.ratios, rtol=0, atol=0)


def test_manufactured_annulus_converges_first_order():
    errs = [manufactured_annulus_error(n) for n in (128, 256)]
    assert errs[1] < errs[0]
    order = math.log2(errs[0] / errs[1])
    assert order >= 1.0
    assert errs[1] < 5e-3


def test_green_conormal_derivative_near_one(field):
    chk = green_normal_derivative(field, k=1, n=512)
    assert chk.nodes.size == 4
    assert chk.means.shape == (4,)
    # the one-sided quotient carries an O(h) bias; the tight bound is
    # asserted at acceptance resolution, this guards the plumbing
    assert chk.max_dev < 0.2
    assert np.all(chk.spreads >= 0.0)


def test_validation_errors(tree):
    with pytest.raises(GeometryError, match="below the supported minimum"):
        discretize(None, n=32, mask=("cells", np.zeros((32, 32), dtype=bool)))
    with pytest.raises(GeometryError, match="unknown mask kind"):
        discretize(None, n=64, mask=("blobs", 1), tree=tree)
    with pytest.raises(GeometryError, match="does not match"):
        discretize(None, n=64, mask=("cells", np.zeros((65, 65), dtype=bool)))
    with pytest.raises(GeometryError, match="needs a tree"):
        discretize(None, n=64, mask=("squares", 1))
    with pytest.raises(GeometryError, match="pole outside"):
        elliptic_measure(None, tree=tree, generation=1, n=64, mask_depth=1, pole=(3.0, 0.0))
    with pytest.raises(GeometryError, match="mask depth"):
        elliptic_measure(None, tree=tree, generation=2, n=256, mask_depth=1)
    with pytest.raises(GeometryError, match="masks no cell"):
        # depth-3 squares have side 1/256; a coarse grid on the wide box
        # cannot resolve them... but masking meets-any-cell still works,
        # so force the failure with a tiny box that misses the squares
        discretize(None, box=(2.0, 4.0), n=64, mask=("squares", 1), tree=tree)


def test_solution_dump_layout(tree, tmp_path):
    problem = discretize(None, n=128, mask=("squares", 1), tree=tree)
    u = solve(problem)
    prefix = str(tmp_path / "sol")
    write_solution(prefix, problem, u)
    header = json.loads(open(f"{prefix}.json").read())
    assert header["shape"] == [128, 128]
    assert header["box"] == list(DEFAULT_BOX)
    raw = np.frombuffer(open(f"{prefix}.bin", "rb").read(), dtype="<f8")
    assert raw.size == 128 * 128
    back = raw.reshape(128, 128)
    assert np.array_equal(np.isnan(back), problem.mask)
