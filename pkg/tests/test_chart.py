"""Contract tests for the assembled chart.

One full-resolution chart is built per module; everything here checks
invariants of that one object, so the expensive tracing runs once.
"""

import csv
import math

import numpy as np
import pytest

from cantorfield.chart import (
    ROW_INNER,
    ROW_OUTER,
    ROW_WINDOW,
    ChartParams,
    build_chart,
)

QUARTER_PI = math.pi / 4.0


def test_grid_shape_and_labels(chart):
    p = chart.params
    # adaptive bisection may add rows beyond the base grid, never columns
    assert chart.Z.shape == (chart.n_s, p.n_t)
    assert chart.A.shape == (chart.n_s, p.n_t)
    assert chart.n_s >= p.n_s
    assert chart.n_s == p.n_s + chart.diagnostics["n_rows_inserted"]
    assert len(chart.t_values) == p.n_t
    assert chart.t_values[0] == 0.0
    assert chart.t_values[-1] == 1.0
    assert np.all(np.diff(chart.s_values) > 0.0)
    assert np.all(np.diff(chart.t_values) > 0.0)
    assert chart.s_values[0] == p.gamma
    assert chart.s_values[-1] == 1.0


def test_nodes_stay_in_sector(chart):
    Z = chart.Z
    assert float(chart.diagnostics["sector_violation_max"]) < 1e-8
    assert np.all(Z.imag >= -1e-12)
    assert np.all(Z.real - Z.imag >= -1e-12)


def test_collar_rows_are_exact_circles(chart):
    p = chart.params
    inner = chart.row_kind == ROW_INNER
    outer = chart.row_kind == ROW_OUTER
    rin = np.abs(chart.Z[inner] - p.z1)
    assert float(np.abs(rin - rin[:, :1]).max()) < 1e-14
    assert abs(float(rin[0, 0]) - p.lam) < 1e-15
    r = np.abs(chart.Z[outer])
    assert float(np.abs(r - r[:, :1]).max()) < 1e-14
    assert abs(float(r[-1, 0]) - 1.0) < 1e-15
    # boundary angles affine in the transverse label: the boundary rows
    # are isometric to circular arcs traversed at constant label speed
    ang_in = np.unwrap(np.angle(chart.Z[inner][0] - p.z1))
    assert float(np.abs(ang_in - (math.pi * chart.t_values - 0.75 * math.pi)).max()) < 1e-12
    ang_out = np.unwrap(np.angle(chart.Z[outer][-1]))
    ang_out[0] = 0.0  # angle of the real point carries no rounding
    assert float(np.abs(ang_out - QUARTER_PI * chart.t_values).max()) < 1e-12


def test_level_curve_through_outer_collar_is_circular(chart):
    # the level curve seeded at (0.97, 0) must be the circle r = 0.97:
    # at the grid's own angles the transverse fraction carries no chord
    # sag, so any angular variation would expose a non-circular row
    theta = QUARTER_PI * chart.t_values[1:-1]
    z = 0.97 * np.exp(1j * theta)
    G, a = chart.interp(z)
    assert float(np.ptp(G)) < 1e-12
    assert abs(float(G[0]) - (1.0 + math.log(0.97))) < 5e-6
    assert float(np.abs(a - 1.0).max()) < 1e-12
    # between grid angles bilinear interpolation rides on row chords;
    # the sag is quadratic in the angular step and stays tiny
    zmid = 0.97 * np.exp(1j * np.linspace(0.0, QUARTER_PI, 181))
    Gm, _ = chart.interp(zmid)
    assert float(np.ptp(Gm)) < 5e-5


def test_orthogonality_of_shipped_tangents(chart):
    d = chart.diagnostics
    assert d["orthogonality_max"] < 1e-3
    # the tangents are exact by construction, so the defect is roundoff
    assert d["orthogonality_max"] < 1e-12


def test_cells_do_not_fold(chart):
    assert chart.diagnostics["cell_jacobian_min"] > 0.0
    Z = chart.Z
    # explicit orientation spot checks on adjacent rows
    rng = np.random.default_rng(7)
    for _ in range(200):
        i = int(rng.integers(0, chart.n_s - 1))
        j = int(rng.integers(0, chart.n_t - 1))
        ds = Z[i + 1, j] - Z[i, j]
        dt = Z[i, j + 1] - Z[i, j]
        assert -(ds * np.conj(dt)).imag > 0.0


def test_window_rows_hand_off_to_the_exact_parameterization(chart):
    assert chart.diagnostics["window_handoff_max"] < 1e-5
    assert chart.diagnostics["hs_handoff_defect"] < 1e-4
    # window rows carry the affine level labels of the origin zone
    p = chart.params
    win = chart.row_kind == ROW_WINDOW
    c = chart.calib.c_values
    assert np.allclose(chart.s_values[win], p.g0 + chart.beta * c, rtol=0, atol=1e-15)


def test_coefficient_pins_and_cross_checks(chart):
    p = chart.params
    inner = chart.row_kind == ROW_INNER
    outer = chart.row_kind == ROW_OUTER
    assert np.all(chart.A[outer] == 1.0)
    assert np.all(chart.A[inner] == 1.0 / (4.0 * p.gamma))
    assert np.all(chart.A[chart.zone] == chart.a0)
    d = chart.diagnostics
    assert d["a_defect_outer"] < 1e-3
    assert d["a_defect_inner"] < 1e-3
    assert d["a_fd_agreement_p50"] < 0.05
    assert chart.A.min() > 0.0
    assert np.isfinite(chart.ellipticity_ratio)


def test_conjugacy_identity_at_nodes(chart):
    # a grad G = (pi/4) * (grad t rotated by -90 degrees) at every node
    grad_G = chart.gp_values[:, None] * chart.Ts / np.abs(chart.Ts) ** 2
    grad_t = chart.Tt / np.abs(chart.Tt) ** 2
    lhs = chart.A * grad_G
    rhs = QUARTER_PI * (-1j) * grad_t
    rel = np.abs(lhs - rhs) / np.abs(rhs)
    assert float(rel.max()) < 1e-4


def test_labels_increase_outward_along_diagonal(chart):
    ell = np.abs(chart.Z[:, -1])
    assert np.all(np.diff(ell) > 0.0)
    assert np.all(np.diff(chart.g_values) > 0.0)


def test_level_value_monotone_along_rays(chart):
    # a ray hugging the sector floor crosses the rows transversally,
    # so the interpolated level must rise strictly
    r = np.linspace(0.14, 0.99, 400)
    z = r * np.exp(0.03j)
    G, _ = chart.interp(z)
    assert np.all(np.diff(G) > 0.0)
    assert G[0] < 0.55 and G[-1] > 0.94
    # on the near diagonal the level falls from the origin value toward
    # the hole circle; a mid-sector ray is no use here because every ray
    # through the sector's middle clips the hole itself
    ell = np.linspace(0.15, 0.36, 200)
    zd = ell * np.exp(1j * QUARTER_PI)
    Gd, _ = chart.interp(zd)
    assert np.all(np.diff(Gd) < 0.0)
    assert Gd[0] > 0.49 and Gd[-1] < 0.27


def test_interp_reproduces_node_values(chart):
    rng = np.random.default_rng(3)
    ii = rng.integers(5, chart.n_s - 5, size=60)
    jj = rng.integers(2, chart.n_t - 2, size=60)
    z = chart.Z[ii, jj]
    G, a = chart.interp(z)
    assert float(np.abs(G - chart.g_values[ii]).max()) < 1e-6
    rel_a = np.abs(a - chart.A[ii, jj]) / chart.A[ii, jj]
    assert float(rel_a.max()) < 1e-3


def test_interp_gradient_matches_field(chart):
    # away from the blend bands the interpolated level gradient must
    # agree with the exact conjugacy identity computed from the field
    rng = np.random.default_rng(11)
    pts = []
    p = chart.params
    while len(pts) < 80:
        r = rng.uniform(0.35, 0.8)
        th = rng.uniform(0.06, QUARTER_PI - 0.06)
        z = r * math.cos(th) + 1j * r * math.sin(th)
        if abs(z - p.z1) > p.rho1_blend + 0.06:
            pts.append(z)
    z = np.array(pts)
    got = chart.interp_grad_G(z)
    gx, gy = chart.field.label_grad(z.real, z.imag)
    grad_t = gx + 1j * gy
    _, a = chart.interp(z)
    want = QUARTER_PI * (-1j) * grad_t / a
    rel = np.abs(got - want) / np.abs(want)
    # bilinear cells reproduce values to second order but gradients only
    # to first; the worst cells sit where rows fan out below the hole
    assert float(np.median(rel)) < 2e-2
    assert float(np.quantile(rel, 0.9)) < 8e-2
    assert float(rel.max()) < 0.2


def test_locate_survives_column_bend(chart):
    # these points sit past the origin bend of their transverse curve;
    # a half-plane test against the hole collar used to misroute them
    # into the collar cells, two rows and half the chart away
    z = np.array([0.5952 + 0.0472j, 0.5962 + 0.0454j, 0.6018 + 0.0386j, 0.6090 + 0.0375j])
    i, j, u, v = chart.locate(z)
    assert np.all(chart.s_values[i] > 0.45)
    Z = chart.Z
    zin = (
        (1 - u) * (1 - v) * Z[i, j]
        + u * (1 - v) * Z[i, j + 1]
        + (1 - u) * v * Z[i + 1, j]
        + u * v * Z[i + 1, j + 1]
    )
    assert float(np.abs(zin - z).max()) < 2e-3


def test_relabel_is_covariant(chart):
    two = chart.relabel(lambda g: g**2, lambda g: 2.0 * g)
    assert np.allclose(two.g_values, chart.g_values**2, rtol=0, atol=1e-15)
    fp = 2.0 * chart.g_values
    assert np.allclose(two.A, chart.A / fp[:, None], rtol=1e-15, atol=0)
    assert np.allclose(two.gp_values, fp, rtol=0, atol=1e-15)
    assert two.a0 == chart.a0 / (2.0 * chart.params.g0)
    # nodes and transverse labels untouched
    assert np.array_equal(two.Z, chart.Z)
    assert np.array_equal(two.t_values, chart.t_values)
    with pytest.raises(Exception):
        chart.relabel(lambda g: -g, lambda g: -np.ones_like(g))


def test_csv_export_round_trip(tmp_path, chart):
    path = tmp_path / "chart.csv"
    chart.export_csv(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["s", "theta", "x", "y", "G", "R", "a"]
    assert len(rows) == 1 + chart.n_s * chart.n_t
    first = [float(v) for v in rows[1]]
    assert first[0] == chart.s_values[0]
    assert first[2] == chart.Z[0, 0].real
    last = [float(v) for v in rows[-1]]
    assert last[0] == chart.s_values[-1]
    assert last[6] == chart.A[-1, -1]


@pytest.fixture(scope="module")
def half_chart():
    return build_chart(resolution_scale=0.5)


def test_build_is_deterministic(half_chart):
    again = build_chart(resolution_scale=0.5)
    assert np.array_equal(half_chart.Z, again.Z)
    assert np.array_equal(half_chart.A, again.A)
    assert half_chart.beta == again.beta and half_chart.kappa == again.kappa


def test_resolution_scale_changes_grid(half_chart):
    p = ChartParams()
    assert half_chart.params.n_s == round(p.n_s * 0.5)
    assert half_chart.n_s >= half_chart.params.n_s
    assert half_chart.n_t == round(p.n_t * 0.5)
