"""
SKT Territory Analysis - テスト
すみ分けパターン・境界・重なり指標
"""

import numpy as np
import pytest

from skt_core_engine.skt_types import Grid, StateUV
from skt_core_engine.skt_errors import PreconditionError
from skt_core_engine.skt_territory import (analyze_territory, center_slope_sign, first_hump_sign,
                                           is_reflection_of)


@pytest.fixture
def grid():
    return Grid(-0.5, 0.5, 99)


def test_two_territories(grid):
    """u が左、v が右に住み分ける"""
    w = -np.sin(2.0 * np.pi * grid.x)
    info = analyze_territory(StateUV(np.maximum(w, 0.0), np.maximum(-w, 0.0)), grid)
    assert info.pattern == "uv"
    assert len(info.interfaces) == 1
    assert info.interfaces[0] == pytest.approx(0.0, abs=grid.h)
    assert info.u_center < 0 < info.v_center
    assert info.overlap == 0.0
    assert info.u_fraction == pytest.approx(info.v_fraction)
    print(f"territory: {info}")


def test_three_territories(grid):
    w = -np.cos(3.0 * np.pi * grid.x)
    info = analyze_territory(StateUV(np.maximum(w, 0.0), np.maximum(-w, 0.0)), grid)
    assert info.pattern == "uvu"
    assert len(info.interfaces) == 2


def test_coexistence_without_territory(grid):
    u = np.cos(np.pi * grid.x)
    info = analyze_territory(StateUV(u, u.copy()), grid)
    assert info.pattern == "="
    assert info.interfaces == []
    assert info.overlap == pytest.approx(1.0)


def test_shape_mismatch(grid):
    with pytest.raises(PreconditionError):
        analyze_territory(StateUV(np.ones(3), np.ones(3)), grid)


def test_reflection(grid):
    f = np.exp(grid.x)
    assert is_reflection_of(f, np.exp(-grid.x), grid)
    assert not is_reflection_of(f, f, grid)
    with pytest.raises(PreconditionError):
        is_reflection_of(f, f, Grid(0.0, 1.0, 99))


def test_sign_helpers(grid):
    w = np.sin(2.0 * np.pi * grid.x)
    # 左端のこぶは負、中央の傾きは正
    assert first_hump_sign(w) == -1
    assert center_slope_sign(w) == 1
    assert first_hump_sign(-w) == 1
    assert center_slope_sign(-w) == -1
    assert first_hump_sign(np.zeros(5)) == 0
