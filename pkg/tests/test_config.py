"""
SKT Run Configuration - テスト
"""

import os

import pytest

from skt_core_engine.skt_types import ContinuationMode, Scaling
from skt_core_engine.skt_errors import ConfigError, ParseError, ValidationError
from skt_core_engine.skt_config import RunConfig, load_config, parse_config, validate_config

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")


def test_lambda_scenario():
    config = load_config(os.path.join(CONFIG_DIR, "lambda_scenario.toml"))
    assert config.mode is ContinuationMode.LAMBDA
    grid = config.grid()
    assert grid.n == 511 and grid.is_symmetric()
    params = config.params(grid)
    assert (params.alpha, params.b1, params.b2, params.c1, params.c2) == (20.0, 3.0, 2.0, 2.0, 1.0)
    assert config.continuation.window == (9.5, 100.0)
    settings = config.continuation_settings()
    assert settings.scaling is Scaling.COEXISTENCE
    assert settings.localization_tol == 1e-4
    assert config.sweep.alphas == [20.0, 50.0, 100.0, 500.0, 10000.0]
    assert config.output.directory == "out/lambda"


def test_d_scenario():
    config = load_config(os.path.join(CONFIG_DIR, "d_scenario.toml"))
    assert config.mode is ContinuationMode.D
    assert config.continuation.window == (0.008, 0.105)
    params = config.params()
    assert (params.b1, params.b2, params.c1, params.c2) == (1.0, 2.0, 1.0, 1.0)


def test_defaults_are_valid():
    config = parse_config("")
    assert config.as_dict() == RunConfig().as_dict()
    assert config.selector().kind == "coexistence"
    assert config.newton().tol_residual == 1e-10


def test_nonpositive_coefficient():
    with pytest.raises(ValidationError) as info:
        parse_config("[model]\nb1 = 0.0\n")
    assert info.value.key == "model.b1"


def test_unknown_key_reports_line():
    text = "[domain]\nn = 63\n\n[model]\nalpha = 5.0\ngamma = 1.0\n"
    with pytest.raises(ParseError) as info:
        parse_config(text)
    assert info.value.key == "model.gamma"
    assert info.value.line == 6


def test_unknown_table():
    with pytest.raises(ParseError) as info:
        parse_config("[plotting]\ncolor = 'red'\n")
    assert info.value.key == "plotting"
    assert info.value.line == 1


def test_malformed_toml():
    with pytest.raises(ParseError) as info:
        parse_config("[domain]\nn = = 3\n")
    assert isinstance(info.value, ConfigError)


def test_wrong_types():
    with pytest.raises(ParseError):
        parse_config("[domain]\nn = 'many'\n")
    with pytest.raises(ParseError):
        parse_config("[continuation]\nwindow = [1.0]\n")


def test_integer_promoted_to_float():
    config = parse_config("[domain]\na = 0\nb = 2\nn = 15\n")
    assert config.domain.a == 0.0 and isinstance(config.domain.a, float)
    assert config.grid().h == pytest.approx(2.0 / 16.0)


@pytest.mark.parametrize("text, key", [
    ("[domain]\na = 1.0\nb = 0.0\n", "domain.a"),
    ("[domain]\nn = 2\n", "domain.n"),
    ("[model]\nmode = 'mu'\n", "model.mode"),
    ("[continuation]\nwindow = [5.0, 1.0]\n", "continuation.window"),
    ("[continuation]\nscaling = 'log'\n", "continuation.scaling"),
    ("[sweep]\nalphas = [50.0, 20.0]\n", "sweep.alphas"),
    ("[sweep]\nkind = 'both'\n", "sweep.kind"),
    ("[sweep]\nsign = '0'\n", "sweep.sign"),
    ("[model]\nalpha = 0.0\n", "model.alpha"),
    ("[domain]\nn = 5\n[model]\nm = [1.0, 1.0]\n", "model.m"),
])
def test_validation_keys(text, key):
    with pytest.raises(ValidationError) as info:
        parse_config(text)
    assert info.value.key == key


def test_weight_table():
    config = parse_config("[domain]\nn = 3\n[model]\nm = [1.0, 2.0, 1.0]\n")
    assert list(config.params().m) == [1.0, 2.0, 1.0]


@pytest.mark.parametrize("text, key", [
    ('[sweep]\nj = "two"\n', "sweep.j"),
    ("[sweep]\nj = 2.5\n", "sweep.j"),
    ("[sweep]\nj = true\n", "sweep.j"),
    ("[sweep]\nsign = 1\n", "sweep.sign"),
])
def test_optional_keys_are_typed(text, key):
    """既定値 None のキーも型を確かめ、ConfigError として報告する"""
    with pytest.raises(ParseError) as info:
        parse_config(text)
    assert info.value.key == key
    assert info.value.line == 2


def test_validate_rejects_bad_branch_index():
    config = RunConfig()
    config.sweep.j = "two"
    with pytest.raises(ValidationError) as info:
        validate_config(config)
    assert info.value.key == "sweep.j"
    config.sweep.j = 0
    with pytest.raises(ValidationError):
        validate_config(config)
    config.sweep.j = 2
    config.sweep.sign = "+"
    validate_config(config)
