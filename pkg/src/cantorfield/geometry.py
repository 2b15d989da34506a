"""Four-corners Cantor set geometry.

The set is generated from the unit square K0 = [-1/2, 1/2]^2 by keeping,
at every step, four corner squares whose sidelength is lam times the
parent's.  With the standard ratio lam = 1/4 the generation-1 squares are
centered at (+-7/16, +-7/16) and the limit set has Hausdorff dimension 1.
Around every generation-k square Q sits a disk B(z(Q), lam^k) and the
similarity F_Q(z) = lam^-k R^-1 (z - z(Q)) carries that disk onto the unit
disk B0, so the complement of the set decomposes into rescaled copies of
the fundamental annulus A0 = B0 minus the four generation-1 disks.

This module owns the square hierarchy: construction (optionally with a
rotation per square), point location in the annulus decomposition, the
self-similar measure mu(Q) = 4^-k, distances to the generation-d
approximation, and the eightfold dihedral folding onto the sector
{x >= y >= 0}.  The hierarchy is stored as flat arrays so that the hot
evaluation kernels can walk it without touching Python objects.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

# Corner squares sit at center + side * CORNER_SIGNS * corner_offset(lam).
# Order is trigonometric: (+,+), (-,+), (-,-), (+,-).
CORNER_SIGNS = np.array([(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)])

_LAMBDA_BRACKET = (1e-3, 0.6)


def corner_offset(lam: float) -> float:
    """Per-axis center offset of a child square, in units of the parent side.

    Chosen so the standard ratio lam = 1/4 reproduces the classical centers
    at 7/16 of the parent side.
    """
    return 0.5 - lam / 4.0


def _ball_constraints(lam: float) -> Tuple[float, float]:
    """Slack of the two disk constraints at ratio lam.

    Returns (quadrant_slack, containment_slack).  The generation-1 disks
    B(z_j, lam) must stay inside their open quadrants (which also keeps
    them pairwise disjoint, since adjacent centers are 2*offset apart) and
    inside the closed unit disk.  Both slacks must be positive.
    """
    o = corner_offset(lam)
    return o - lam, 1.0 - (math.sqrt(2.0) * o + lam)


def lambda_max(tol: float = 1e-12) -> float:
    """Largest admissible contraction ratio, found by bisection.

    A ratio is admissible when the four generation-1 disks are pairwise
    disjoint, contained in the unit disk, and each contained in its open
    quadrant.  The quadrant condition binds first and gives 2/5.
    """
    lo, hi = _LAMBDA_BRACKET
    if min(_ball_constraints(lo)) <= 0.0:
        raise RuntimeError("lower bisection bracket is not admissible")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if min(_ball_constraints(mid)) > 0.0:
            lo = mid
        else:
            hi = mid
    return lo


class GeometryError(ValueError):
    """Raised for inadmissible geometry parameters."""


@dataclass(frozen=True)
class GeometryParams:
    """Parameters of the square hierarchy.

    Attributes
    ----------
    lam : float
        Contraction ratio per generation, in (0, lambda_max].
    depth : int
        Deepest generation to materialize, >= 0.
    rotations : None | "random" | sequence of float
        None builds the standard axis-aligned set.  "random" draws one
        angle per square from rotation_seed.  A sequence gives explicit
        angles consumed in breadth-first order (cycled if short).
    rotation_seed : int
        Seed for the "random" policy.
    """

    lam: float = 0.25
    depth: int = 5
    rotations: Union[None, str, Sequence[float]] = None
    rotation_seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 < self.lam):
            raise GeometryError(f"ratio lam={self.lam} must be positive")
        lmax = lambda_max()
        q, c = _ball_constraints(self.lam)
        if q <= 0.0 or c < 0.0:
            bad = "open-quadrant disjointness" if q <= 0.0 else "containment in the unit disk"
            raise GeometryError(
                f"ratio lam={self.lam} violates {bad}; the generation-1 disks "
                f"B(z_j, lam) require lam <= lambda_max = {lmax:.12f}"
            )
        if self.depth < 0:
            raise GeometryError("depth must be >= 0")
        if isinstance(self.rotations, str) and self.rotations != "random":
            raise GeometryError(f"unknown rotation policy {self.rotations!r}")


def _tree_size(depth: int) -> int:
    return (4 ** (depth + 1) - 1) // 3


@dataclass
class CantorTree:
    """Flat breadth-first storage of the square hierarchy.

    Node 0 is K0.  The children of node i are nodes 4i+1 .. 4i+4 in
    trigonometric corner order, so no explicit child index is stored.
    ``angle`` accumulates rotations from the root, and (cos_a, sin_a)
    cache its cosine and sine for the similarity maps.
    """

    params: GeometryParams
    centers: np.ndarray          # (n, 2) square centers, world frame
    angle: np.ndarray            # (n,) accumulated rotation
    cos_a: np.ndarray
    sin_a: np.ndarray
    generation: np.ndarray       # (n,) int32
    n_nodes: int = field(init=False)

    def __post_init__(self) -> None:
        self.n_nodes = self.centers.shape[0]

    # -- navigation ------------------------------------------------------

    def children(self, i: int) -> range:
        first = 4 * i + 1
        if first >= self.n_nodes:
            return range(0)
        return range(first, first + 4)

    def parent(self, i: int) -> int:
        return (i - 1) // 4 if i > 0 else -1

    def side(self, i: int) -> float:
        return self.params.lam ** int(self.generation[i])

    def ball_radius(self, i: int) -> float:
        """Radius of the disk glued around square i (equals its side scale)."""
        return self.params.lam ** int(self.generation[i])

    def nodes_at(self, gen: int) -> range:
        if gen < 0 or gen > self.params.depth:
            raise GeometryError(f"generation {gen} outside tree depth {self.params.depth}")
        start = _tree_size(gen - 1) if gen > 0 else 0
        return range(start, _tree_size(gen))

    def invariant_measure(self, i: int) -> float:
        """mu of the square: 4^-generation, independent of lam."""
        return 4.0 ** (-int(self.generation[i]))

    # -- similarity maps --------------------------------------------------

    def to_local(self, i: int, z: np.ndarray) -> np.ndarray:
        """Apply F_Q for square i: rescale its disk onto the unit disk."""
        z = np.asarray(z, dtype=float)
        scale = self.params.lam ** (-int(self.generation[i]))
        dx = z[..., 0] - self.centers[i, 0]
        dy = z[..., 1] - self.centers[i, 1]
        c, s = self.cos_a[i], self.sin_a[i]
        out = np.empty(np.broadcast(dx, dy).shape + (2,))
        out[..., 0] = scale * (c * dx + s * dy)
        out[..., 1] = scale * (-s * dx + c * dy)
        return out

    def from_local(self, i: int, w: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`to_local`."""
        w = np.asarray(w, dtype=float)
        scale = self.params.lam ** int(self.generation[i])
        c, s = self.cos_a[i], self.sin_a[i]
        out = np.empty(w.shape)
        out[..., 0] = scale * (c * w[..., 0] - s * w[..., 1]) + self.centers[i, 0]
        out[..., 1] = scale * (s * w[..., 0] + c * w[..., 1]) + self.centers[i, 1]
        return out

    # -- point location ---------------------------------------------------

    def locate(self, z: Sequence[float]) -> "LocateResult":
        """Resolve which annulus of the decomposition contains z.

        Walks down the disk hierarchy: starting from B0, descend into a
        child disk while one contains z.  The walk ends in the annulus of
        the last square entered, in the exterior of B0, or unresolved when
        z is still inside a deepest-generation disk.
        """
        x, y = float(z[0]), float(z[1])
        if x * x + y * y > 1.0:
            return LocateResult("exterior", -1, None)
        node = 0
        lam = self.params.lam
        for gen in range(1, self.params.depth + 1):
            r = lam ** gen
            r2 = r * r
            nxt = -1
            for c in self.children(node):
                dx = x - self.centers[c, 0]
                dy = y - self.centers[c, 1]
                if dx * dx + dy * dy <= r2:
                    nxt = c
                    break
            if nxt < 0:
                local = self.to_local(node, np.array([x, y]))
                return LocateResult("annulus", node, local)
            node = nxt
        return LocateResult("unresolved", node, None)

    # -- distance to the generation-d approximation -----------------------

    def dist_to_set(self, z: Sequence[float], gen: Optional[int] = None) -> float:
        """Distance from z to the union of generation-``gen`` squares.

        Branch and bound over the hierarchy: a subtree is pruned when the
        distance to its bounding disk already exceeds the best square
        distance found.  Defaults to the deepest generation.
        """
        if gen is None:
            gen = self.params.depth
        if gen < 0 or gen > self.params.depth:
            raise GeometryError(f"generation {gen} outside tree depth {self.params.depth}")
        x, y = float(z[0]), float(z[1])
        lam = self.params.lam
        best = math.inf
        # (lower bound, node) stack; bounding disk of the subtree below node
        # i at generation g: center z(i), radius lam^g * reach, where reach
        # bounds the farthest descendant point in local units.
        o = corner_offset(lam)
        reach = math.sqrt(2.0) * (o / (1.0 - lam)) + 0.5 * math.sqrt(2.0)
        stack: List[int] = [0]
        while stack:
            i = stack.pop()
            g = int(self.generation[i])
            scale = lam ** g
            dx, dy = x - self.centers[i, 0], y - self.centers[i, 1]
            d_center = math.hypot(dx, dy)
            if g == gen:
                best = min(best, self._dist_to_square(i, x, y))
                continue
            if d_center - scale * reach >= best:
                continue
            stack.extend(self.children(i))
        return best

    def _dist_to_square(self, i: int, x: float, y: float) -> float:
        # Rotate into the square frame, then the usual box distance.
        c, s = self.cos_a[i], self.sin_a[i]
        dx, dy = x - self.centers[i, 0], y - self.centers[i, 1]
        lx = c * dx + s * dy
        ly = -s * dx + c * dy
        h = 0.5 * self.side(i)
        qx = max(abs(lx) - h, 0.0)
        qy = max(abs(ly) - h, 0.0)
        return math.hypot(qx, qy)

    # -- exports -----------------------------------------------------------

    def squares_at(self, gen: int) -> Iterator[Tuple[int, float, float, float, float]]:
        """Yield (node, cx, cy, side, angle) over generation ``gen``."""
        for i in self.nodes_at(gen):
            yield i, float(self.centers[i, 0]), float(self.centers[i, 1]), self.side(i), float(self.angle[i])

    def write_squares_csv(self, path: str, gen: int) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node", "generation", "cx", "cy", "side", "angle", "mu"])
            for i, cx, cy, side, ang in self.squares_at(gen):
                w.writerow([i, gen, repr(cx), repr(cy), repr(side), repr(ang), repr(self.invariant_measure(i))])


@dataclass(frozen=True)
class LocateResult:
    """Outcome of :meth:`CantorTree.locate`.

    kind is "annulus", "exterior" or "unresolved"; node is the annulus
    square (or the deepest disk entered when unresolved); local holds
    F_Q(z) for the annulus case.
    """

    kind: str
    node: int
    local: Optional[np.ndarray]


def build_tree(params: GeometryParams) -> CantorTree:
    """Materialize the hierarchy down to ``params.depth``.

    Child angles are relative to the parent frame and accumulate down the
    tree; children sit at the corners of the parent square as oriented.
    """
    n = _tree_size(params.depth)
    centers = np.zeros((n, 2))
    angle = np.zeros(n)
    gen = np.zeros(n, dtype=np.int32)

    rel = np.zeros(n)
    if params.rotations == "random":
        rng = np.random.default_rng(params.rotation_seed)
        rel[1:] = rng.uniform(-math.pi, math.pi, size=n - 1)
    elif params.rotations is not None:
        seq = np.asarray(list(params.rotations), dtype=float)
        if seq.size == 0:
            raise GeometryError("rotation angle list is empty")
        rel[1:] = np.resize(seq, n - 1)

    o = corner_offset(params.lam)
    for i in range(n):
        first = 4 * i + 1
        if first >= n:
            break
        g = int(gen[i])
        side = params.lam ** g
        ca, sa = math.cos(angle[i]), math.sin(angle[i])
        for j in range(4):
            k = first + j
            ox = o * CORNER_SIGNS[j, 0] * side
            oy = o * CORNER_SIGNS[j, 1] * side
            centers[k, 0] = centers[i, 0] + ca * ox - sa * oy
            centers[k, 1] = centers[i, 1] + sa * ox + ca * oy
            angle[k] = angle[i] + rel[k]
            gen[k] = g + 1
    return CantorTree(
        params=params,
        centers=centers,
        angle=angle,
        cos_a=np.cos(angle),
        sin_a=np.sin(angle),
        generation=gen,
    )


# -- dihedral symmetry ------------------------------------------------------

def fold_to_sector(x: float, y: float) -> Tuple[float, float]:
    """Fold a point into the fundamental sector {x >= y >= 0}.

    Reflections across the axes and the diagonals generate the dihedral
    group of the standard set; the fold is exact in floating point since
    it only negates and swaps coordinates.
    """
    ax, ay = abs(x), abs(y)
    return (ax, ay) if ax >= ay else (ay, ax)


def dihedral_orbit(x: float, y: float) -> np.ndarray:
    """The eight dihedral images of (x, y), with repeats when on a mirror."""
    pts = []
    for sx in (1.0, -1.0):
        for sy in (1.0, -1.0):
            pts.append((sx * x, sy * y))
            pts.append((sy * y, sx * x))
    return np.array(pts)
