"""
SKT Core Types and Data Structures
SKT 連続体解析 - 基本型とデータ構造
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp

try:
    from .skt_errors import InvalidDomain, PreconditionError
except ImportError:
    import sys
    import os
    sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
    from skt_errors import InvalidDomain, PreconditionError


class ContinuationMode(Enum):
    """分岐パラメータの種類"""
    LAMBDA = "lambda"
    D = "d"

    def param_name(self) -> str:
        return "lambda" if self is ContinuationMode.LAMBDA else "d"


class Scaling(Enum):
    """未知数 (w, z) に掛けるスケール (σ_w, σ_z)"""
    COEXISTENCE = "coexistence"   # (α, α^2)
    SEGREGATION = "segregation"   # (1, α)
    RAW = "raw"                   # (1, 1)

    def factors(self, alpha: float) -> Tuple[float, float]:
        if self is Scaling.COEXISTENCE:
            return alpha, alpha * alpha
        if self is Scaling.SEGREGATION:
            return 1.0, alpha
        return 1.0, 1.0


class BifurcationKind(Enum):
    SIMPLE_FROM_TRIVIAL = "simple-from-trivial"
    PITCHFORK = "pitchfork"
    FOLD = "fold"


class LimitKind(Enum):
    Z0 = "Z0"
    ZETA0 = "zeta0"
    PSI = "Psi"
    THETA = "theta"
    ZJ = "Zj"
    U = "U"
    LS2 = "LS2"


class Verdict(Enum):
    SMALL_COEXISTENCE = "SmallCoexistence"
    COMPLETE_SEGREGATION = "CompleteSegregation"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class Grid:
    """一様格子 x_i = a + i h (i = 1..n)、h = (b - a)/(n + 1)、両端は Dirichlet"""
    a: float
    b: float
    n: int
    h: float = field(init=False)

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)) or self.a >= self.b:
            raise InvalidDomain(f"invalid interval ({self.a}, {self.b})")
        if int(self.n) != self.n or self.n < 3:
            raise InvalidDomain(f"need n >= 3 interior nodes, got {self.n}")
        object.__setattr__(self, "h", (self.b - self.a) / (self.n + 1))

    @property
    def x(self) -> np.ndarray:
        """内点座標"""
        return self.a + self.h * np.arange(1, self.n + 1)

    @property
    def length(self) -> float:
        return self.b - self.a

    def is_symmetric(self) -> bool:
        return abs(self.a + self.b) <= 1e-14 * self.length

    def reflect(self, values: np.ndarray) -> np.ndarray:
        """x -> a + b - x の鏡映（節点 i <-> n+1-i）"""
        return np.asarray(values)[::-1].copy()


@dataclass
class BandedMatrix:
    """帯行列。ab[upper + i - j, j] = A[i, j]（scipy.linalg.solve_banded の配置）"""
    n: int
    lower: int
    upper: int
    ab: np.ndarray

    @classmethod
    def from_diagonals(cls, n: int, diagonals: Dict[int, np.ndarray]) -> "BandedMatrix":
        """オフセット k の対角 A[i, i+k] から組み立てる"""
        lower = max([-k for k in diagonals if k < 0], default=0)
        upper = max([k for k in diagonals if k > 0], default=0)
        ab = np.zeros((lower + upper + 1, n))
        for k, values in diagonals.items():
            values = np.asarray(values, dtype=float)
            if values.shape != (n - abs(k),):
                raise PreconditionError(f"diagonal {k} has shape {values.shape}, want {(n - abs(k),)}")
            if k >= 0:
                ab[upper - k, k:] = values
            else:
                ab[upper - k, :n + k] = values
        return cls(n=n, lower=lower, upper=upper, ab=ab)

    def diagonal(self, k: int = 0) -> np.ndarray:
        if k >= 0:
            return self.ab[self.upper - k, k:].copy()
        return self.ab[self.upper - k, :self.n + k].copy()

    def to_sparse(self) -> sp.csc_matrix:
        offsets = list(range(self.upper, -self.lower - 1, -1))
        diags = [self.diagonal(k) for k in offsets]
        return sp.diags(diags, offsets, shape=(self.n, self.n), format="csc")

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.zeros(self.n)
        for k in range(-self.lower, self.upper + 1):
            d = self.diagonal(k)
            if k >= 0:
                y[:self.n - k] += d * x[k:]
            else:
                y[-k:] += d * x[:self.n + k]
        return y

    def scaled(self, left: np.ndarray, right: np.ndarray) -> "BandedMatrix":
        """diag(left) A diag(right)"""
        left = np.asarray(left, dtype=float)
        right = np.asarray(right, dtype=float)
        ab = self.ab.copy()
        for row in range(ab.shape[0]):
            k = self.upper - row
            if k >= 0:
                ab[row, k:] *= left[:self.n - k] * right[k:]
            else:
                ab[row, :self.n + k] *= left[-k:] * right[:self.n + k]
        return BandedMatrix(self.n, self.lower, self.upper, ab)

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.to_sparse()).sum(axis=1)))


@dataclass
class EigenPair:
    """-Δφ = μ m φ の固有対（φ は sup ノルム 1、最初の内点値が正）"""
    value: float
    vector: np.ndarray
    index: int = 1


@dataclass(eq=False)
class ModelParams:
    """SKT 系のパラメータ（α = 1/ε、m は格子上の値）"""
    alpha: float
    b1: float
    b2: float
    c1: float
    c2: float
    m: np.ndarray
    lam: float = 0.0
    eps: float = field(init=False)

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=float)
        if not np.isfinite(self.alpha) or self.alpha < 0:
            raise PreconditionError(f"alpha must be >= 0, got {self.alpha}")
        for name in ("b1", "b2", "c1", "c2"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise PreconditionError(f"{name} must be > 0, got {value}")
        if self.m.ndim != 1 or np.any(~np.isfinite(self.m)) or np.any(self.m < 0):
            raise PreconditionError("m must be a finite non-negative nodal array")
        if not np.any(self.m > 0):
            raise PreconditionError("m must not vanish identically")
        self.eps = 1.0 / self.alpha if self.alpha > 0 else float("inf")

    @classmethod
    def on_grid(cls, grid: Grid, alpha: float, b1: float, b2: float, c1: float, c2: float,
                m: Any = 1.0, lam: float = 0.0) -> "ModelParams":
        """m を定数・関数・節点配列のいずれでも受け付けて格子上に置く"""
        if callable(m):
            values = np.asarray(m(grid.x), dtype=float)
        elif np.ndim(m) == 0:
            values = np.full(grid.n, float(m))
        else:
            values = np.asarray(m, dtype=float)
            if values.shape != (grid.n,):
                raise PreconditionError(f"m table has {values.size} values, grid has {grid.n}")
        return cls(alpha=alpha, b1=b1, b2=b2, c1=c1, c2=c2, m=values, lam=lam)

    def with_lambda(self, lam: float) -> "ModelParams":
        return replace(self, lam=lam)

    def with_alpha(self, alpha: float) -> "ModelParams":
        return replace(self, alpha=alpha)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "alpha": self.alpha, "b1": self.b1, "b2": self.b2, "c1": self.c1, "c2": self.c2,
            "lam": self.lam, "m": [float(v) for v in self.m],
        }


@dataclass
class StateUV:
    u: np.ndarray
    v: np.ndarray


@dataclass
class StateWZ:
    """w = u - v, z = (ε + v) u"""
    w: np.ndarray
    z: np.ndarray

    def to_vector(self) -> np.ndarray:
        """交互配置 [w_1, z_1, w_2, z_2, ...]"""
        x = np.empty(2 * len(self.w))
        x[0::2] = self.w
        x[1::2] = self.z
        return x

    @classmethod
    def from_vector(cls, x: np.ndarray) -> "StateWZ":
        x = np.asarray(x, dtype=float)
        return cls(w=x[0::2].copy(), z=x[1::2].copy())

    def scaled(self, sigma_w: float, sigma_z: float) -> "StateWZ":
        return StateWZ(w=sigma_w * self.w, z=sigma_z * self.z)


@dataclass
class NewtonConfig:
    tol_residual: float = 1e-10
    tol_step: float = 1e-12
    max_iter: int = 50
    damping: float = 0.5
    min_step: float = 1e-4
    armijo: float = 1e-4
    line_search: bool = True

    def validate(self) -> None:
        if self.tol_residual <= 0 or self.tol_step <= 0:
            raise PreconditionError("Newton tolerances must be positive")
        if self.max_iter < 1:
            raise PreconditionError("max_iter must be >= 1")
        if not 0 < self.damping < 1 or not 0 < self.min_step <= 1:
            raise PreconditionError("damping and min_step must lie in (0, 1)")


@dataclass
class NewtonReport:
    converged: bool
    iterations: int
    final_residual: float
    final_state: np.ndarray
    det_sign: int = 0
    criterion: str = ""
    tolerance: float = 0.0
    history: List[float] = field(default_factory=list)
    factorization: Any = field(default=None, repr=False)


@dataclass
class BranchPoint:
    """
    分岐上の1点。tangent はスケール座標の拡大ベクトル。

    state は常に λ 形式の非スケール (w, z) で、d-mode でも λ = 1/d での値を持つ。
    uv と norms は現在のモードの値（d-mode では u/λ, v/λ）。
    """
    param: float
    state: StateWZ
    uv: StateUV
    norms: Tuple[float, float, float, float]   # (|u|_2, |v|_2, |u|_inf, |v|_inf)
    tangent: Optional[np.ndarray] = None
    eigs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    det_sign: int = 0
    alpha: float = 0.0
    residual: float = 0.0
    flags: List[str] = field(default_factory=list)
    info: Dict[str, Any] = field(default_factory=dict)

    def unstable_count(self, radius: float) -> int:
        """半径 radius 内の実部正の監視固有値の個数"""
        eigs = np.asarray(self.eigs)
        return int(np.sum((np.abs(eigs) < radius) & (np.real(eigs) > 0)))


@dataclass
class BifurcationRecord:
    param_at: float
    kernel: np.ndarray
    kind: BifurcationKind
    localization_width: float
    point: BranchPoint
    index: int = 0               # points[index-1] と points[index] の間
    crossings: int = 1


@dataclass
class Branch:
    id: str
    mode: ContinuationMode
    params: ModelParams
    grid: Grid
    parent: Optional[Tuple[str, float]] = None
    points: List[BranchPoint] = field(default_factory=list)
    bifurcations: List[BifurcationRecord] = field(default_factory=list)
    meta: Dict[str, Any] = field(default_factory=dict)

    def params_array(self) -> np.ndarray:
        return np.array([p.param for p in self.points])

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class LimitField:
    kind: LimitKind
    param: float
    values: np.ndarray
    info: Dict[str, Any] = field(default_factory=dict)


@dataclass
class ShootingSolution:
    lam: float
    j: int
    sign: str
    slope0: float
    zeros: int
    sign_at_center: int
    x: np.ndarray
    w: np.ndarray
    endpoint_residual: float
    profile: Optional[Callable[[np.ndarray], np.ndarray]] = field(
        default=None, repr=False, compare=False)

    def sample(self, points: np.ndarray) -> np.ndarray:
        """任意の点で w を評価（密出力を使う）"""
        if self.profile is None:
            return np.interp(points, self.x, self.w)
        return np.asarray(self.profile(points))


@dataclass
class SweepReport:
    lam: float
    alphas: List[float] = field(default_factory=list)
    points: List[BranchPoint] = field(default_factory=list)
    metrics: List[Dict[str, float]] = field(default_factory=list)
    verdict: Verdict = Verdict.UNDETERMINED
    fitted_rate: float = float("nan")
    selector: Dict[str, Any] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    def metric_series(self, name: str) -> np.ndarray:
        return np.array([entry.get(name, np.nan) for entry in self.metrics], dtype=float)


@dataclass
class TerritoryInfo:
    """すみ分けパターンの要約"""
    interfaces: List[float]
    pattern: str
    u_fraction: float
    v_fraction: float
    u_center: float
    v_center: float
    overlap: float
