"""
SKT Test Fixtures
SKT 連続体解析 - テスト共通フィクスチャ
"""

import os
import sys

import numpy as np
import pytest

# リポジトリルートをパスに追加
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from skt_core_engine.skt_types import BifurcationKind, Grid, ModelParams  # noqa: E402
from skt_core_engine.skt_errors import StepFailure  # noqa: E402
from skt_core_engine.skt_continuation import ContinuationProcessor  # noqa: E402
from skt_core_engine.skt_utils import create_lambda_scenario_params  # noqa: E402


@pytest.fixture
def grid31():
    return Grid(-0.5, 0.5, 31)


@pytest.fixture
def grid63():
    return Grid(-0.5, 0.5, 63)


@pytest.fixture
def lambda_params31(grid31):
    """λ 基準設定（粗い格子）"""
    return ModelParams.on_grid(grid31, 20.0, b1=3.0, b2=2.0, c1=2.0, c2=1.0, m=1.0)


@pytest.fixture
def random_state(grid31):
    """滑らかな正値の (u, v)"""
    rng = np.random.default_rng(7)
    x = grid31.x
    bump = np.cos(np.pi * x)
    u = bump * (0.5 + 0.3 * rng.random(grid31.n))
    v = bump * (0.2 + 0.3 * rng.random(grid31.n))
    return u, v


@pytest.fixture(scope="session")
def short_primary_branch():
    """λ1 から少しだけ追跡した主枝（n = 31）"""
    grid = Grid(-0.5, 0.5, 31)
    params = ModelParams.on_grid(grid, 20.0, b1=3.0, b2=2.0, c1=2.0, c2=1.0, m=1.0)
    processor = ContinuationProcessor(params, grid)
    seed = processor.seed_primary_branch()
    lam1 = seed.param / (1.0 + processor.settings.seed_amplitude)
    branch = processor.trace_branch(seed, (lam1 - 1.0, lam1 + 3.0))
    return processor, branch


@pytest.fixture(scope="session")
def pitchfork_family():
    """
    λ 基準設定 (n = 127) の主枝 C（λ <= 45）と、最初のピッチフォークから両側に乗った子枝。

    乗り換えに失敗した側は None のまま返す。
    """
    params, grid = create_lambda_scenario_params(n=127)
    processor = ContinuationProcessor(params, grid)
    seed = processor.seed_primary_branch()
    lam1 = seed.param / (1.0 + processor.settings.seed_amplitude)
    window = (lam1 - 1.0, 45.0)
    primary = processor.trace_branch(seed, window)
    record = next(r for r in primary.bifurcations if r.kind is BifurcationKind.PITCHFORK)
    starts = processor.switch_branch(record, base_branch=primary)

    def follow(start):
        if start is None:
            return None
        try:
            return processor.trace_branch(start, window, branch_id=processor.child_label(start),
                                          parent=(primary.id, record.param_at))
        except StepFailure as exc:
            return exc.partial

    children = [follow(start) for start in starts]
    return {"processor": processor, "primary": primary, "record": record,
            "starts": starts, "children": children, "lam1": lam1}
