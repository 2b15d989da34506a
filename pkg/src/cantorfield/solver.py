"""Finite-volume Dirichlet solver on box truncations of the complement.

The grid is a uniform n-by-n cell-centered mesh over a square box.
Cells inside an obstacle (generation squares, generation disks, or a
caller-supplied cell set) are masked and carry Dirichlet data; the outer
box edge is Dirichlet as well.  Fluxes use harmonic-mean face
transmissibilities, which keeps the operator symmetric and diagonally
dominant and makes interior row sums vanish.  Boundary faces sit half a
cell from the adjacent center, hence the factor 2 in their coefficient.

Solves run conjugate gradients preconditioned with an algebraic
multigrid hierarchy that is built once per matrix and reused, so a
measure table (one solve per square, same operator) pays for a single
setup.  Every solve is checked against the discrete maximum principle.
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping
from dataclasses import dataclass, field as dataclass_field
from typing import Callable, Optional, Union

import numpy as np
import pyamg
import scipy.sparse as sp
from scipy.sparse.linalg import cg

from .field import CoefficientField
from .geometry import CantorTree, GeometryError, dihedral_orbit

DEFAULT_BOX = (-2.5, 2.5)
FAR_POLE = (2.0, 0.8)

MaskSpec = tuple
DataValue = Union[float, Callable, Mapping[int, float]]


class SolverError(RuntimeError):
    """Linear solve failed or produced an inadmissible solution."""


@dataclass
class DiscreteProblem:
    """Assembled five-point operator plus the Dirichlet face lists.

    Faces are stored flat: row index of the live cell, transmissibility,
    owner id of the obstacle component behind the face (-1 for the outer
    box, -2 for caller-supplied masks), and the face midpoint.  The right
    hand side for any data assignment is a weighted scatter over these
    lists, so one matrix serves many data sets.
    """

    box: tuple
    n: int
    h: float
    mask: np.ndarray
    owner: np.ndarray
    index: np.ndarray
    a: np.ndarray
    matrix: sp.csr_matrix
    face_row: np.ndarray
    face_T: np.ndarray
    face_owner: np.ndarray
    face_mx: np.ndarray
    face_my: np.ndarray
    b: np.ndarray
    data_range: tuple
    _amg: object = dataclass_field(default=None, repr=False, compare=False)

    @property
    def n_unknowns(self) -> int:
        return self.b.size

    def cell_centers(self) -> np.ndarray:
        lo, hi = self.box
        return lo + (np.arange(self.n) + 0.5) * self.h

    def rhs(self, mask_data: DataValue = 0.0, box_data: DataValue = 0.0):
        """Right hand side and data bounds for one boundary assignment."""
        vals = np.empty(self.face_row.size)
        is_box = self.face_owner == -1
        for sel, data in ((is_box, box_data), (~is_box, mask_data)):
            if not np.any(sel):
                continue
            if callable(data):
                vals[sel] = data(self.face_mx[sel], self.face_my[sel])
            elif isinstance(data, Mapping):
                vals[sel] = [data.get(int(o), 0.0) for o in self.face_owner[sel]]
            else:
                vals[sel] = float(data)
        b = np.zeros(self.matrix.shape[0])
        np.add.at(b, self.face_row, self.face_T * vals)
        if vals.size:
            return b, (float(vals.min()), float(vals.max()))
        return b, (0.0, 0.0)

    def preconditioner(self):
        if self._amg is None:
            self._amg = pyamg.smoothed_aggregation_solver(
                self.matrix, max_coarse=500, symmetry="symmetric"
            )
        return self._amg.aspreconditioner(cycle="V")


def _mask_squares(tree: CantorTree, gen: int, xs: np.ndarray, h: float):
    """Cells meeting any generation-``gen`` square, labeled by square."""
    n = xs.size
    mask = np.zeros((n, n), dtype=bool)
    owner = np.full((n, n), -1, dtype=np.int64)
    nodes = np.flatnonzero(tree.generation == gen)
    side = tree.params.lam ** gen
    aligned = tree.params.rotations is None
    lo = xs[0] - 0.5 * h
    for nd in nodes:
        cx, cy = tree.centers[nd]
        reach = (side + h) / 2 if aligned else side / math.sqrt(2) + h
        i0 = max(int(np.floor((cx - reach - lo) / h)), 0)
        i1 = min(int(np.ceil((cx + reach - lo) / h)), n - 1)
        j0 = max(int(np.floor((cy - reach - lo) / h)), 0)
        j1 = min(int(np.ceil((cy + reach - lo) / h)), n - 1)
        if i0 > i1 or j0 > j1:
            raise GeometryError(
                f"square {nd} (side {side:g} at {cx:.4f},{cy:.4f}) masks no cell at h={h:g}"
            )
        gx, gy = np.meshgrid(xs[i0 : i1 + 1], xs[j0 : j1 + 1], indexing="ij")
        if aligned:
            hit = (np.abs(gx - cx) <= (side + h) / 2) & (np.abs(gy - cy) <= (side + h) / 2)
        else:
            w = tree.to_local(nd, np.stack([gx, gy], axis=-1)) * (side / 1.0)
            dx = np.maximum(np.abs(w[..., 0]) - 0.5 * side, 0.0)
            dy = np.maximum(np.abs(w[..., 1]) - 0.5 * side, 0.0)
            hit = np.hypot(dx, dy) <= h / math.sqrt(2)
        if not np.any(hit):
            raise GeometryError(
                f"square {nd} (side {side:g} at {cx:.4f},{cy:.4f}) masks no cell at h={h:g}"
            )
        sub = (slice(i0, i1 + 1), slice(j0, j1 + 1))
        mask[sub] |= hit
        owner[sub] = np.where(hit, nd, owner[sub])
    return mask, owner


def _mask_disks(tree: CantorTree, gen: int, xs: np.ndarray, h: float):
    """Cells meeting any generation-``gen`` disk, labeled by disk."""
    n = xs.size
    mask = np.zeros((n, n), dtype=bool)
    owner = np.full((n, n), -1, dtype=np.int64)
    nodes = np.flatnonzero(tree.generation == gen)
    radius = tree.params.lam ** gen
    reach = radius + h / math.sqrt(2)
    lo = xs[0] - 0.5 * h
    for nd in nodes:
        cx, cy = tree.centers[nd]
        i0 = max(int(np.floor((cx - reach - lo) / h)), 0)
        i1 = min(int(np.ceil((cx + reach - lo) / h)), n - 1)
        j0 = max(int(np.floor((cy - reach - lo) / h)), 0)
        j1 = min(int(np.ceil((cy + reach - lo) / h)), n - 1)
        gx, gy = np.meshgrid(xs[i0 : i1 + 1], xs[j0 : j1 + 1], indexing="ij")
        hit = np.hypot(gx - cx, gy - cy) <= reach
        if not np.any(hit):
            raise GeometryError(
                f"disk {nd} (radius {radius:g} at {cx:.4f},{cy:.4f}) masks no cell at h={h:g}"
            )
        sub = (slice(i0, i1 + 1), slice(j0, j1 + 1))
        mask[sub] |= hit
        owner[sub] = np.where(hit, nd, owner[sub])
    return mask, owner


def discretize(
    field: Optional[CoefficientField],
    box: tuple = DEFAULT_BOX,
    n: int = 512,
    mask: MaskSpec = ("squares", 2),
    data: tuple = (0.0, 0.0),
    tree: Optional[CantorTree] = None,
) -> DiscreteProblem:
    """Assemble div a grad on the box minus an obstacle mask.

    ``field=None`` assembles the constant-coefficient operator.  ``mask``
    is ("squares", gen), ("disks", gen), or ("cells", bool_array); the
    two named kinds guarantee the obstacle is covered (cells are masked
    whenever they meet it, never clipped).  ``data`` is the pair
    (mask values, box values), each a scalar, a callable of the face
    midpoints, or a mapping from component owner id to value.
    """
    if n < 64:
        raise GeometryError(f"resolution n={n} below the supported minimum 64")
    lo, hi = float(box[0]), float(box[1])
    h = (hi - lo) / n
    xs = lo + (np.arange(n) + 0.5) * h
    if tree is None and field is not None:
        tree = field.tree

    kind = mask[0]
    if kind in ("squares", "disks") and tree is None:
        raise GeometryError(f"mask kind {kind!r} needs a tree when no field is given")
    if kind == "squares":
        mask2, owner = _mask_squares(tree, int(mask[1]), xs, h)
    elif kind == "disks":
        mask2, owner = _mask_disks(tree, int(mask[1]), xs, h)
    elif kind == "cells":
        mask2 = np.asarray(mask[1], dtype=bool)
        if mask2.shape != (n, n):
            raise GeometryError(f"cell mask shape {mask2.shape} does not match n={n}")
        owner = np.where(mask2, -2, -1).astype(np.int64)
    else:
        raise GeometryError(f"unknown mask kind {kind!r}")

    if field is None:
        a = np.ones((n, n))
    else:
        a = field.a_on_grid(xs, xs, mask=mask2)

    index = np.full((n, n), -1, dtype=np.int64)
    live = ~mask2
    index[live] = np.arange(int(live.sum()))

    rows, cols, vals = [], [], []
    f_row, f_T, f_owner, f_mx, f_my = [], [], [], [], []

    def interior(sl_a, sl_b):
        both = live[sl_a] & live[sl_b]
        aL, aR = a[sl_a][both], a[sl_b][both]
        T = 2.0 * aL * aR / (aL + aR)
        r, c = index[sl_a][both], index[sl_b][both]
        rows.extend((r, c, r, c))
        cols.extend((r, c, c, r))
        vals.extend((T, T, -T, -T))

    interior((slice(None, -1), slice(None)), (slice(1, None), slice(None)))
    interior((slice(None), slice(None, -1)), (slice(None), slice(1, None)))

    gx, gy = np.meshgrid(xs, xs, indexing="ij")

    def dirichlet(cell_sel, nb_owner, mx, my):
        T = 2.0 * a[cell_sel]
        f_row.append(index[cell_sel])
        f_T.append(T)
        f_owner.append(nb_owner)
        f_mx.append(mx)
        f_my.append(my)
        rows.append(index[cell_sel])
        cols.append(index[cell_sel])
        vals.append(T)

    # faces against masked neighbors, all four orientations
    for sl_c, sl_m, off in (
        ((slice(None, -1), slice(None)), (slice(1, None), slice(None)), (0.5, 0.0)),
        ((slice(1, None), slice(None)), (slice(None, -1), slice(None)), (-0.5, 0.0)),
        ((slice(None), slice(None, -1)), (slice(None), slice(1, None)), (0.0, 0.5)),
        ((slice(None), slice(1, None)), (slice(None), slice(None, -1)), (0.0, -0.5)),
    ):
        sel = live[sl_c] & mask2[sl_m]
        if not np.any(sel):
            continue
        cell = tuple(np.nonzero(sel))
        ci = (cell[0] + (sl_c[0].start or 0), cell[1] + (sl_c[1].start or 0))
        mi = (cell[0] + (sl_m[0].start or 0), cell[1] + (sl_m[1].start or 0))
        dirichlet(ci, owner[mi], gx[ci] + off[0] * h, gy[ci] + off[1] * h)

    # outer box faces
    for sl, mx_fun in (
        ((0, slice(None)), lambda c: (np.full(c.size, lo), xs[c])),
        ((n - 1, slice(None)), lambda c: (np.full(c.size, hi), xs[c])),
        ((slice(None), 0), lambda c: (xs[c], np.full(c.size, lo))),
        ((slice(None), n - 1), lambda c: (xs[c], np.full(c.size, hi))),
    ):
        sel = live[sl]
        if not np.any(sel):
            continue
        which = np.flatnonzero(sel)
        if isinstance(sl[0], int):
            ci = (np.full(which.size, sl[0]), which)
        else:
            ci = (which, np.full(which.size, sl[1]))
        mx, my = mx_fun(which)
        dirichlet(ci, np.full(which.size, -1, dtype=np.int64), mx, my)

    m = int(live.sum())
    matrix = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(m, m)
    ).tocsr()

    problem = DiscreteProblem(
        box=(lo, hi),
        n=n,
        h=h,
        mask=mask2,
        owner=owner,
        index=index,
        a=a,
        matrix=matrix,
        face_row=np.concatenate(f_row),
        face_T=np.concatenate(f_T),
        face_owner=np.concatenate(f_owner),
        face_mx=np.concatenate(f_mx),
        face_my=np.concatenate(f_my),
        b=np.zeros(m),
        data_range=(0.0, 0.0),
    )
    problem.b, problem.data_range = problem.rhs(data[0], data[1])
    return problem


def solve(
    problem: DiscreteProblem,
    tol: float = 1e-8,
    b: Optional[np.ndarray] = None,
    data_range: Optional[tuple] = None,
) -> np.ndarray:
    """Solve for the cell values; masked cells are NaN in the result.

    Preconditioned conjugate gradients to relative residual ``tol``.
    The discrete maximum principle is asserted on every solve: values
    must stay inside the Dirichlet data range up to solver noise.
    """
    if b is None:
        b, data_range = problem.b, problem.data_range
    M = problem.preconditioner()
    x, info = cg(problem.matrix, b, rtol=tol, atol=0.0, maxiter=400, M=M)
    if info != 0:
        r = problem.matrix @ x - b
        raise SolverError(
            f"conjugate gradients stopped at {info} iterations, "
            f"relative residual {np.linalg.norm(r) / max(np.linalg.norm(b), 1e-300):.3e}"
        )
    if data_range is not None:
        lo, hi = data_range
        # iterative-solver noise scale, far below any tolerance we assert on
        slack = 1e-6 * max(1.0, abs(lo), abs(hi))
        if x.size and (x.min() < lo - slack or x.max() > hi + slack):
            raise SolverError(
                f"maximum principle violated: solution range [{x.min():.6g}, {x.max():.6g}] "
                f"vs data range [{lo:.6g}, {hi:.6g}]"
            )
    u = np.full((problem.n, problem.n), np.nan)
    u[~problem.mask] = x
    return u


def sample_solution(problem: DiscreteProblem, u: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Bilinear values of a solution grid at interior points."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    lo, _ = problem.box
    fx = (pts[:, 0] - lo) / problem.h - 0.5
    fy = (pts[:, 1] - lo) / problem.h - 0.5
    i = np.clip(np.floor(fx).astype(int), 0, problem.n - 2)
    j = np.clip(np.floor(fy).astype(int), 0, problem.n - 2)
    tx, ty = fx - i, fy - j
    corners = u[i, j], u[i + 1, j], u[i, j + 1], u[i + 1, j + 1]
    if any(np.any(np.isnan(c)) for c in corners):
        raise SolverError("sample point touches a masked cell")
    return (
        corners[0] * (1 - tx) * (1 - ty)
        + corners[1] * tx * (1 - ty)
        + corners[2] * (1 - tx) * ty
        + corners[3] * tx * ty
    )


def _resolve_pole(pole) -> np.ndarray:
    if isinstance(pole, str):
        if pole != "far":
            raise GeometryError(f"unknown pole spec {pole!r}")
        return dihedral_orbit(*FAR_POLE)
    if isinstance(pole, tuple) and len(pole) == 2 and pole[0] == "orbit":
        return dihedral_orbit(*pole[1])
    return np.asarray(pole, dtype=float).reshape(1, 2)


def _ancestor_at(nodes: np.ndarray, from_gen: int, to_gen: int) -> np.ndarray:
    out = np.asarray(nodes, dtype=np.int64).copy()
    for _ in range(from_gen - to_gen):
        out = (out - 1) // 4
    return out


@dataclass
class MeasureEstimate:
    """Per-square boundary masses seen from a pole, against 4^-m."""

    generation: int
    mask_depth: int
    n: int
    box: tuple
    poles: np.ndarray
    nodes: np.ndarray
    centers: np.ndarray
    masses: np.ndarray
    total_mass: float
    tol: float

    @property
    def mu(self) -> float:
        return 4.0 ** (-self.generation)

    @property
    def ratios(self) -> np.ndarray:
        """Renormalized mass over mu; 1 everywhere in the exact limit."""
        return self.masses / self.total_mass / self.mu

    def write_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["square", "k", "cx", "cy", "mass", "mu", "ratio"])
            for nd, (cx, cy), mass, ratio in zip(
                self.nodes, self.centers, self.masses, self.ratios
            ):
                w.writerow(
                    [
                        int(nd),
                        self.generation,
                        f"{cx:.17g}",
                        f"{cy:.17g}",
                        f"{mass:.17g}",
                        f"{self.mu:.17g}",
                        f"{ratio:.17g}",
                    ]
                )


def elliptic_measure(
    field: Optional[CoefficientField],
    tree: Optional[CantorTree] = None,
    generation: int = 2,
    pole="far",
    n: int = 1024,
    mask_depth: int = 3,
    tol: float = 1e-8,
    box: tuple = DEFAULT_BOX,
    problem: Optional[DiscreteProblem] = None,
) -> MeasureEstimate:
    """Boundary mass of each generation-m square from indicator solves.

    One matrix serves the whole table: the obstacle (and hence the
    operator) is fixed by the mask depth, only the Dirichlet data moves
    from square to square.  The mass of a square is the solution of the
    indicator problem for its descendants, read at the pole; a pole
    orbit is averaged, which forces the exact dihedral symmetry back
    onto quantities the truncation would otherwise skew.
    """
    if tree is None:
        if field is None:
            raise GeometryError("either a field or a tree is required")
        tree = field.tree
    if mask_depth < generation:
        raise GeometryError(f"mask depth {mask_depth} under table generation {generation}")
    poles = _resolve_pole(pole)
    if problem is None:
        problem = discretize(field, box=box, n=n, mask=("squares", mask_depth), tree=tree)
    if np.any(np.hypot(poles[:, 0], poles[:, 1]) >= abs(problem.box[1])):
        raise GeometryError("pole outside the solve box")

    mask_faces = problem.face_owner >= 0
    anc = np.full(problem.face_owner.size, -1, dtype=np.int64)
    anc[mask_faces] = _ancestor_at(problem.face_owner[mask_faces], mask_depth, generation)

    nodes = np.flatnonzero(tree.generation == generation)
    masses = np.empty(nodes.size)
    for q, nd in enumerate(nodes):
        vals = np.where(anc == nd, 1.0, 0.0)
        b = np.zeros(problem.matrix.shape[0])
        np.add.at(b, problem.face_row, problem.face_T * vals)
        u = solve(problem, tol=tol, b=b, data_range=(0.0, 1.0))
        masses[q] = float(np.mean(sample_solution(problem, u, poles)))
    return MeasureEstimate(
        generation=generation,
        mask_depth=mask_depth,
        n=n,
        box=problem.box,
        poles=poles,
        nodes=nodes,
        centers=tree.centers[nodes].copy(),
        masses=masses,
        total_mass=float(masses.sum()),
        tol=tol,
    )


@dataclass
class NormalDerivativeCheck:
    """Co-normal derivative of G - 4^-k sampled outward on each circle."""

    k: int
    n: int
    step: float
    nodes: np.ndarray
    means: np.ndarray
    spreads: np.ndarray

    @property
    def max_dev(self) -> float:
        """Largest departure of a per-circle mean from the exact value 1."""
        return float(np.max(np.abs(self.means - 1.0)))


def green_normal_derivative(
    field: CoefficientField, k: int = 1, n: int = 2048, box: tuple = DEFAULT_BOX
) -> NormalDerivativeCheck:
    """One-sided co-normal difference quotients on the generation circles.

    The step is the grid pitch a solver would have at resolution n, so
    the deviation tracks what a discrete flux on that grid could see.
    The level value on each circle is exactly 4^-k by the gluing
    identities, so only the outward sample costs an evaluation.
    """
    tree = field.tree
    if k > tree.params.depth:
        raise GeometryError(f"generation {k} exceeds tree depth {tree.params.depth}")
    h = (box[1] - box[0]) / n
    radius = field.lam ** k
    if h > 0.5 * radius:
        raise GeometryError(f"step {h:g} does not resolve circles of radius {radius:g}")
    nodes = np.flatnonzero(tree.generation == k)
    m = max(128, int(round(2 * np.pi * radius / h)))
    th = (np.arange(m) + 0.5) * (2 * np.pi / m)
    level = field.gamma ** k
    means = np.empty(nodes.size)
    spreads = np.empty(nodes.size)
    for q, nd in enumerate(nodes):
        cx, cy = tree.centers[nd]
        px = cx + (radius + h) * np.cos(th)
        py = cy + (radius + h) * np.sin(th)
        G = field.eval_G(px, py)
        a = field.eval_a(px, py)
        cono = a * (G - level) / h
        means[q] = float(np.mean(cono))
        spreads[q] = float(np.max(np.abs(cono - means[q])))
    return NormalDerivativeCheck(k=k, n=n, step=h, nodes=nodes, means=means, spreads=spreads)


def manufactured_annulus_error(n: int, box: tuple = (-1.25, 1.25)) -> float:
    """Max interior error against the radial closed form on an annulus.

    Constant coefficient; the obstacle mask carves the annulus
    1/4 <= r <= 1 out of the box, with the exact solution supplied as
    Dirichlet data on the staircase boundary.  The staircase limits the
    convergence order to one, which is what the validation asserts.
    """
    lo, hi = box
    h = (hi - lo) / n
    xs = lo + (np.arange(n) + 0.5) * h
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    r = np.hypot(gx, gy)
    cells = (r <= 0.25) | (r >= 1.0)

    def exact(x, y):
        return 0.25 + 0.25 * np.log(4.0 * np.hypot(x, y))

    problem = discretize(None, box=box, n=n, mask=("cells", cells), data=(exact, exact))
    u = solve(problem)
    band = (r >= 0.3) & (r <= 0.9)
    return float(np.max(np.abs(u[band] - exact(gx[band], gy[band]))))


def write_solution(path_prefix: str, problem: DiscreteProblem, u: np.ndarray) -> None:
    """Flat float64 dump plus a JSON header describing the layout."""
    raw = np.ascontiguousarray(u, dtype="<f8")
    with open(f"{path_prefix}.bin", "wb") as fh:
        fh.write(raw.tobytes())
    header = {
        "box": [problem.box[0], problem.box[1]],
        "dtype": "<f8",
        "h": problem.h,
        "masked_value": "nan",
        "order": "row-major, x index first",
        "shape": [problem.n, problem.n],
    }
    with open(f"{path_prefix}.json", "w") as fh:
        json.dump(header, fh, indent=2, sort_keys=True)
        fh.write("\n")
