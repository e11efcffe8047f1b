"""
SKT Run Configuration
SKT 連続体解析 - 実行設定の読み込みと検証

1 段の TOML テーブル [domain] [model] [continuation] [sweep] [output] を
RunConfig に写す。未知のキーは ParseError、前提条件違反は ValidationError。
"""

import math
import sys
from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional, Tuple, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

try:
    from .skt_types import ContinuationMode, Grid, ModelParams, NewtonConfig, Scaling
    from .skt_errors import ParseError, PreconditionError, ValidationError
    from .skt_continuation import ContinuationSettings
    from .skt_classifier import BranchSelector, ClassifierThresholds
except ImportError:
    import os
    sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
    from skt_types import ContinuationMode, Grid, ModelParams, NewtonConfig, Scaling
    from skt_errors import ParseError, PreconditionError, ValidationError
    from skt_continuation import ContinuationSettings
    from skt_classifier import BranchSelector, ClassifierThresholds


@dataclass
class DomainConfig:
    a: float = -0.5
    b: float = 0.5
    n: int = 511


@dataclass
class ModelConfig:
    mode: str = "lambda"
    alpha: float = 20.0
    b1: float = 3.0
    b2: float = 2.0
    c1: float = 2.0
    c2: float = 1.0
    m: Union[float, List[float]] = 1.0
    lam: float = 1.0           # d モードでの λ（d = 1/λ の基準）


@dataclass
class ContinuationConfig:
    window: Tuple[float, float] = (9.5, 100.0)
    ds: float = 0.05
    ds_max: float = 5.0
    localization_tol: float = 1e-4
    n_eigs: int = 6
    max_points: int = 5000
    max_depth: int = 1
    scaling: str = "coexistence"
    tol_residual: float = 1e-10
    max_iter: int = 50


@dataclass
class SweepConfig:
    lam: float = 20.0
    alphas: List[float] = field(default_factory=lambda: [20.0, 50.0, 100.0, 500.0, 1e4])
    kind: str = "coexistence"
    j: Optional[int] = None
    sign: Optional[str] = None
    coexistence_factor: float = 2.0
    coexistence_gap: float = 0.1
    segregation_overlap: float = 0.05


@dataclass
class OutputConfig:
    directory: str = "out"
    palette: List[str] = field(default_factory=lambda: ["#1f4fd1", "#d1261f", "#7b2fbe", "#2a9d3c"])


@dataclass
class RunConfig:
    """実行設定一式"""
    domain: DomainConfig = field(default_factory=DomainConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    continuation: ContinuationConfig = field(default_factory=ContinuationConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @property
    def mode(self) -> ContinuationMode:
        return ContinuationMode(self.model.mode)

    def grid(self) -> Grid:
        return Grid(self.domain.a, self.domain.b, self.domain.n)

    def params(self, grid: Optional[Grid] = None) -> ModelParams:
        grid = grid or self.grid()
        md = self.model
        return ModelParams.on_grid(grid, md.alpha, md.b1, md.b2, md.c1, md.c2, m=md.m, lam=md.lam)

    def newton(self) -> NewtonConfig:
        return NewtonConfig(tol_residual=self.continuation.tol_residual,
                            max_iter=self.continuation.max_iter)

    def continuation_settings(self) -> ContinuationSettings:
        cc = self.continuation
        return ContinuationSettings(ds=cc.ds, ds_max=cc.ds_max, localization_tol=cc.localization_tol,
                                    n_eigs=cc.n_eigs, max_points=cc.max_points,
                                    scaling=Scaling(cc.scaling), newton=self.newton())

    def thresholds(self) -> ClassifierThresholds:
        sw = self.sweep
        return ClassifierThresholds(sw.coexistence_factor, sw.coexistence_gap, sw.segregation_overlap)

    def selector(self) -> BranchSelector:
        return BranchSelector(kind=self.sweep.kind, j=self.sweep.j, sign=self.sweep.sign)

    def as_dict(self) -> Dict[str, Any]:
        result = {}
        for section in fields(self):
            table = getattr(self, section.name)
            result[section.name] = {f.name: getattr(table, f.name) for f in fields(table)}
        return result


SECTIONS = {
    "domain": DomainConfig,
    "model": ModelConfig,
    "continuation": ContinuationConfig,
    "sweep": SweepConfig,
    "output": OutputConfig,
}


OPTIONAL_TYPES = {"sweep.j": int, "sweep.sign": str}


def _key_line(text: str, section: str, key: Optional[str] = None) -> Optional[int]:
    """診断用にキー（またはテーブル見出し）の行番号を探す"""
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line.strip("[] ")
            if key is None and current == section:
                return number
            continue
        if key is not None and current == section and line.split("=", 1)[0].strip() == key:
            return number
    return None


def _coerce(section: str, key: str, value: Any, default: Any, line: Optional[int]) -> Any:
    """既定値の型に合わせて値を変換する"""
    name = f"{section}.{key}"
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ParseError(f"{name} must be a boolean", line=line, key=name)
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ParseError(f"{name} must be an integer", line=line, key=name)
        return value
    if isinstance(default, float):
        if key == "m" and isinstance(value, list):
            return [float(v) for v in value]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParseError(f"{name} must be a number", line=line, key=name)
        return float(value)
    if isinstance(default, tuple):
        if not isinstance(value, list) or len(value) != len(default):
            raise ParseError(f"{name} must be a list of {len(default)} numbers", line=line, key=name)
        return tuple(float(v) for v in value)
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ParseError(f"{name} must be a list", line=line, key=name)
        return [type(default[0])(v) for v in value] if default else list(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ParseError(f"{name} must be a string", line=line, key=name)
        return value
    # 既定値 None のキーは型表で確かめる
    expected = OPTIONAL_TYPES.get(name)
    if expected is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ParseError(f"{name} must be an integer", line=line, key=name)
    if expected is str and not isinstance(value, str):
        raise ParseError(f"{name} must be a string", line=line, key=name)
    return value


def parse_config(text: str) -> RunConfig:
    """TOML 文書から検証済みの RunConfig を作る"""
    try:
        document = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"invalid TOML: {exc}", line=getattr(exc, "lineno", None)) from exc

    config = RunConfig()
    for section, table in document.items():
        if section not in SECTIONS:
            raise ParseError(f"unknown table [{section}]", line=_key_line(text, section), key=section)
        if not isinstance(table, dict):
            raise ParseError(f"[{section}] must be a table", line=_key_line(text, section), key=section)
        target = getattr(config, section)
        known = {f.name for f in fields(target)}
        for key, value in table.items():
            line = _key_line(text, section, key)
            if key not in known:
                raise ParseError(f"unknown key {section}.{key}", line=line, key=f"{section}.{key}")
            if isinstance(value, dict):
                raise ParseError(f"nested table {section}.{key} is not supported", line=line,
                                 key=f"{section}.{key}")
            setattr(target, key, _coerce(section, key, value, getattr(target, key), line))
    validate_config(config)
    return config


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config(handle.read())


def validate_config(config: RunConfig) -> None:
    """解く前にすべての前提条件を確かめる"""
    dm, md, cc, sw = config.domain, config.model, config.continuation, config.sweep
    if not (math.isfinite(dm.a) and math.isfinite(dm.b) and dm.a < dm.b):
        raise ValidationError("domain needs a < b", key="domain.a")
    if dm.n < 3:
        raise ValidationError("domain.n must be >= 3", key="domain.n")
    if md.mode not in ("lambda", "d"):
        raise ValidationError("model.mode must be 'lambda' or 'd'", key="model.mode")
    for key in ("b1", "b2", "c1", "c2"):
        if not getattr(md, key) > 0:
            raise ValidationError(f"model.{key} must be > 0", key=f"model.{key}")
    if not md.alpha > 0:
        raise ValidationError("model.alpha must be > 0", key="model.alpha")
    if not md.lam > 0:
        raise ValidationError("model.lam must be > 0", key="model.lam")
    if isinstance(md.m, list) and len(md.m) != dm.n:
        raise ValidationError(f"model.m has {len(md.m)} values, grid has {dm.n}", key="model.m")
    lo, hi = cc.window
    if not 0 < lo < hi:
        raise ValidationError("continuation.window must satisfy 0 < low < high",
                              key="continuation.window")
    if cc.scaling not in {s.value for s in Scaling}:
        raise ValidationError(f"unknown scaling {cc.scaling!r}", key="continuation.scaling")
    if cc.max_depth < 0:
        raise ValidationError("continuation.max_depth must be >= 0", key="continuation.max_depth")
    if sw.kind not in ("coexistence", "segregation"):
        raise ValidationError("sweep.kind must be 'coexistence' or 'segregation'", key="sweep.kind")
    if sw.sign not in (None, "+", "-"):
        raise ValidationError("sweep.sign must be '+' or '-'", key="sweep.sign")
    if sw.j is not None and (isinstance(sw.j, bool) or not isinstance(sw.j, int) or sw.j < 1):
        raise ValidationError("sweep.j must be an integer >= 1", key="sweep.j")
    alphas = sw.alphas
    if any(a <= 0 for a in alphas) or any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ValidationError("sweep.alphas must be positive and increasing", key="sweep.alphas")
    try:
        params = config.params()
        config.continuation_settings().validate()
        config.thresholds().validate()
    except PreconditionError as exc:
        raise ValidationError(str(exc)) from exc
    if params.m.shape != (dm.n,):
        raise ValidationError("model.m does not match the grid", key="model.m")
