"""Construction of the conjugate-pair chart on the fundamental annulus."""

from .chart import ROW_BULK, ROW_INNER, ROW_OUTER, ROW_WINDOW, ConjugateChart, build_chart
from .field import LabelField
from .labels import BallCalibration, LevelFunction, build_level_function
from .params import ChartParams, default_chart_params

__all__ = [
    "BallCalibration",
    "ChartParams",
    "ConjugateChart",
    "LabelField",
    "LevelFunction",
    "ROW_BULK",
    "ROW_INNER",
    "ROW_OUTER",
    "ROW_WINDOW",
    "build_chart",
    "build_level_function",
    "default_chart_params",
]
