"""Shared fixtures.

Chart construction dominates test runtime, so the default chart and the
fields derived from it are session-scoped and shared across modules.
Tests must not mutate them.
"""

import pytest

from cantorfield.chart import build_chart
from cantorfield.field import build_field, make_variant


@pytest.fixture(scope="session")
def chart():
    return build_chart()


@pytest.fixture(scope="session")
def field(chart):
    return build_field(chart=chart)


@pytest.fixture(scope="session")
def dim_field(field):
    # half resolution keeps the second chart build affordable
    return make_variant(field, "dimension", resolution_scale=0.5)
