"""Degenerate-coefficient elliptic fields on a self-similar planar set.

The package builds a conjugate coordinate chart on the first annulus of
the four-square hierarchy, extends it to the whole plane by the
similarity maps, and exposes the resulting level function G and scalar
coefficient a together with finite-volume solvers and verification
checks.
"""

from .chart import ConjugateChart, build_chart
from .field import (
    BULK,
    EXTERIOR,
    INNER,
    OUTER,
    UNRESOLVED,
    ZONE,
    CoefficientField,
    build_field,
    make_variant,
)
from .geometry import CantorTree, GeometryError, GeometryParams, build_tree

__all__ = [
    "BULK",
    "EXTERIOR",
    "INNER",
    "OUTER",
    "UNRESOLVED",
    "ZONE",
    "CantorTree",
    "CoefficientField",
    "ConjugateChart",
    "GeometryError",
    "GeometryParams",
    "build_chart",
    "build_field",
    "build_tree",
    "make_variant",
]

__version__ = "0.1.0"
