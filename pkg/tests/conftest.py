"""Shared fixtures and hypothesis strategies."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st
from hypothesis.extra.numpy import array_shapes, arrays

sys.path.insert(0, str(Path(__file__).parent))  # tests import oracles directly


def masks(max_side: int = 8):
    return arrays(
        dtype=bool,
        shape=array_shapes(min_dims=2, max_dims=2, min_side=1, max_side=max_side),
    )


def finite_points(lo=-100.0, hi=100.0):
    coord = st.floats(min_value=lo, max_value=hi, allow_nan=False, allow_infinity=False)
    return st.tuples(coord, coord)


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)
