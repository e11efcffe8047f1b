"""
SKT Model Core
SKT 連続体解析 - 変数変換・残差・Jacobian

(u, v) <-> (w, z) = (u - v, (ε + v) u) の変換と、定常 SKT 系の
非スケール / スケール (W, Z) = (σ_w w, σ_z z) 版の残差と解析 Jacobian。
未知数は交互配置 x[0::2] = w, x[1::2] = z（帯幅 2）。
"""

from typing import List, Optional, Tuple

import numpy as np

try:
    from .skt_types import BandedMatrix, Grid, ModelParams, Scaling, StateUV, StateWZ
    from .skt_errors import DegenerateDiscriminant, NegativeDiscriminant, PreconditionError
    from .skt_numerics import apply_laplacian, laplacian_solve
    from .skt_logging import get_logger
except ImportError:
    import sys
    import os
    sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
    from skt_types import BandedMatrix, Grid, ModelParams, Scaling, StateUV, StateWZ
    from skt_errors import DegenerateDiscriminant, NegativeDiscriminant, PreconditionError
    from skt_numerics import apply_laplacian, laplacian_solve
    from skt_logging import get_logger

logger = get_logger(__name__)

DISCRIMINANT_FLOOR = 1e-12


def wz_from_uv(state: StateUV, eps: float) -> StateWZ:
    u = np.asarray(state.u, dtype=float)
    v = np.asarray(state.v, dtype=float)
    return StateWZ(w=u - v, z=(eps + v) * u)


def _roots(w: np.ndarray, z: np.ndarray, eps: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """p, q >= 0 with p - q = w - ε, p q = z（桁落ちしない側から計算）"""
    t = w - eps
    disc = t * t + 4.0 * z
    bad = disc < 0
    if np.any(bad):
        node = int(np.argmax(bad))
        raise NegativeDiscriminant(node, float(disc[node]))
    root = np.sqrt(disc)
    p = np.empty_like(t)
    q = np.empty_like(t)
    pos = t >= 0
    neg = ~pos
    p[pos] = 0.5 * (root[pos] + t[pos])
    q[neg] = 0.5 * (root[neg] - t[neg])
    with np.errstate(divide="ignore", invalid="ignore"):
        q[pos] = np.where(p[pos] > 0, z[pos] / p[pos], 0.5 * (root[pos] - t[pos]))
        p[neg] = np.where(q[neg] > 0, z[neg] / q[neg], 0.5 * (root[neg] + t[neg]))
    return p, q, root


def uv_from_wz(state: StateWZ, eps: float) -> StateUV:
    """逆変換 u = p, v = q - ε"""
    w = np.asarray(state.w, dtype=float)
    z = np.asarray(state.z, dtype=float)
    p, q, _ = _roots(w, z, eps)
    return StateUV(u=p, v=q - eps)


def _recover_with_derivatives(w: np.ndarray, z: np.ndarray, eps: float):
    """(u, v) と偏導関数 u_w, u_z, v_w, v_z"""
    p, q, root = _roots(w, z, eps)
    low = root * root < DISCRIMINANT_FLOOR
    if np.any(low):
        node = int(np.argmax(low))
        raise DegenerateDiscriminant(node, float(root[node] ** 2))
    inv = 1.0 / root
    return p, q - eps, p * inv, inv, -q * inv, inv


# --- 反応項 -----------------------------------------------------------------

def _f1(p: ModelParams, u, v):
    return p.b1 * u * u + (p.c1 - p.b2) * u * v - p.c2 * v * v


def _f1_grad(p: ModelParams, u, v):
    return 2.0 * p.b1 * u + (p.c1 - p.b2) * v, (p.c1 - p.b2) * u - 2.0 * p.c2 * v


def _g(p: ModelParams, u, v):
    return p.b1 * u * u + p.c1 * u * v


def _g_grad(p: ModelParams, u, v):
    return 2.0 * p.b1 * u + p.c1 * v, p.c1 * u


def interleave(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    x = np.empty(2 * len(first))
    x[0::2] = first
    x[1::2] = second
    return x


def _assemble(grid: Grid, d_ww, d_wz, d_zw, d_zz) -> BandedMatrix:
    """J = [[-A + diag(d_ww), diag(d_wz)], [diag(d_zw), -A + diag(d_zz)]] を交互配置で"""
    n = grid.n
    inv_h2 = 1.0 / grid.h ** 2
    main = interleave(d_ww - 2.0 * inv_h2, d_zz - 2.0 * inv_h2)
    plus1 = np.zeros(2 * n - 1)
    plus1[0::2] = d_wz
    minus1 = np.zeros(2 * n - 1)
    minus1[0::2] = d_zw
    two = np.full(2 * n - 2, inv_h2)
    return BandedMatrix.from_diagonals(2 * n, {-2: two, -1: minus1, 0: main, 1: plus1, 2: two})


# --- (u, v) 形式 -------------------------------------------------------------

def residual_uv(p: ModelParams, state: StateUV, grid: Grid) -> Tuple[np.ndarray, np.ndarray]:
    """Δ[(1+αv)u] + u(λm - b1 u - c1 v), Δ[(1+αu)v] + v(λm - b2 u - c2 v) の符号反転なし版"""
    u = np.asarray(state.u, dtype=float)
    v = np.asarray(state.v, dtype=float)
    r1 = -apply_laplacian(grid, (1.0 + p.alpha * v) * u) + u * (p.lam * p.m - p.b1 * u - p.c1 * v)
    r2 = -apply_laplacian(grid, (1.0 + p.alpha * u) * v) + v * (p.lam * p.m - p.b2 * u - p.c2 * v)
    return r1, r2


def residual_d(p: ModelParams, d: float, state: StateUV, grid: Grid) -> Tuple[np.ndarray, np.ndarray]:
    """拡散係数形式 Δ[(d + αv)u] + u(m - b1 u - c1 v) = 0"""
    u = np.asarray(state.u, dtype=float)
    v = np.asarray(state.v, dtype=float)
    r1 = -apply_laplacian(grid, (d + p.alpha * v) * u) + u * (p.m - p.b1 * u - p.c1 * v)
    r2 = -apply_laplacian(grid, (d + p.alpha * u) * v) + v * (p.m - p.b2 * u - p.c2 * v)
    return r1, r2


# --- 非スケール (w, z) -------------------------------------------------------

def residual_wz(p: ModelParams, state: StateWZ, grid: Grid) -> np.ndarray:
    """交互配置の残差 (r1, r2)"""
    w = np.asarray(state.w, dtype=float)
    z = np.asarray(state.z, dtype=float)
    uv = uv_from_wz(state, p.eps)
    r1 = -apply_laplacian(grid, w) + p.lam * p.m * w - _f1(p, uv.u, uv.v)
    r2 = -apply_laplacian(grid, z) + p.eps * (p.lam * p.m * uv.u - _g(p, uv.u, uv.v))
    return interleave(r1, r2)


def jacobian_wz(p: ModelParams, state: StateWZ, grid: Grid) -> BandedMatrix:
    w = np.asarray(state.w, dtype=float)
    z = np.asarray(state.z, dtype=float)
    u, v, u_w, u_z, v_w, v_z = _recover_with_derivatives(w, z, p.eps)
    f_u, f_v = _f1_grad(p, u, v)
    g_u, g_v = _g_grad(p, u, v)
    lm = p.lam * p.m
    d_ww = lm - f_u * u_w - f_v * v_w
    d_wz = -f_u * u_z - f_v * v_z
    d_zw = p.eps * ((lm - g_u) * u_w - g_v * v_w)
    d_zz = p.eps * ((lm - g_u) * u_z - g_v * v_z)
    return _assemble(grid, d_ww, d_wz, d_zw, d_zz)


def dparam_wz(p: ModelParams, state: StateWZ) -> np.ndarray:
    """∂(r1, r2)/∂λ"""
    uv = uv_from_wz(state, p.eps)
    return interleave(p.m * np.asarray(state.w, dtype=float), p.eps * p.m * uv.u)


# --- スケール (W, Z) = (α w, α^2 z) ----------------------------------------------
# (U, V) = (α u, α v) は ε = 1 の逆変換で得られる。ε = 0 で極限系に一致する。

def _scaled_eps(p: ModelParams, eps: Optional[float]) -> float:
    value = p.eps if eps is None else float(eps)
    if value < 0 or not np.isfinite(value):
        raise PreconditionError(f"scaled system needs finite eps >= 0, got {value}")
    return value


def residual_scaled_WZ(p: ModelParams, state: StateWZ, grid: Grid,
                       eps: Optional[float] = None) -> np.ndarray:
    e = _scaled_eps(p, eps)
    W = np.asarray(state.w, dtype=float)
    Z = np.asarray(state.z, dtype=float)
    UV = uv_from_wz(state, 1.0)
    lm = p.lam * p.m
    r1 = -apply_laplacian(grid, W) + lm * W - e * _f1(p, UV.u, UV.v)
    r2 = -apply_laplacian(grid, Z) + lm * UV.u - e * _g(p, UV.u, UV.v)
    return interleave(r1, r2)


def jacobian_scaled_WZ(p: ModelParams, state: StateWZ, grid: Grid,
                       eps: Optional[float] = None) -> BandedMatrix:
    e = _scaled_eps(p, eps)
    W = np.asarray(state.w, dtype=float)
    Z = np.asarray(state.z, dtype=float)
    U, V, U_W, U_Z, V_W, V_Z = _recover_with_derivatives(W, Z, 1.0)
    f_u, f_v = _f1_grad(p, U, V)
    g_u, g_v = _g_grad(p, U, V)
    lm = p.lam * p.m
    d_ww = lm - e * (f_u * U_W + f_v * V_W)
    d_wz = -e * (f_u * U_Z + f_v * V_Z)
    d_zw = lm * U_W - e * (g_u * U_W + g_v * V_W)
    d_zz = lm * U_Z - e * (g_u * U_Z + g_v * V_Z)
    return _assemble(grid, d_ww, d_wz, d_zw, d_zz)


def residual_limit_WZ(p: ModelParams, state: StateWZ, grid: Grid) -> np.ndarray:
    """α -> ∞ の極限系（ε = 0）"""
    return residual_scaled_WZ(p, state, grid, eps=0.0)


def jacobian_limit_WZ(p: ModelParams, state: StateWZ, grid: Grid) -> BandedMatrix:
    return jacobian_scaled_WZ(p, state, grid, eps=0.0)


# --- 先験的評価 --------------------------------------------------------------

def apriori_bounds(p: ModelParams, grid: Grid) -> Tuple[float, float, float, float]:
    """
    非負解の先験的評価 (|u|_2 上界, |v|_2 上界, M1, M2)。

    M1 は (1 + αv)u、M2 は (1 + αu)v の上界。離散版でも
    M 行列の比較原理でそのまま成り立つ。
    """
    l2_m = float(np.sqrt(grid.h * np.dot(p.m, p.m)))
    sup_potential = float(np.max(laplacian_solve(grid, p.m * p.m)))
    M1 = p.lam ** 2 / (4.0 * p.b1) * sup_potential
    M2 = p.lam ** 2 / (4.0 * p.c2) * sup_potential
    return p.lam * l2_m / p.b1, p.lam * l2_m / p.c2, M1, M2


def check_apriori(p: ModelParams, uv: StateUV, grid: Grid, slack: float = 1e-6) -> List[str]:
    """評価を破っている項目のリスト（空なら OK）"""
    l2_u, l2_v, M1, M2 = apriori_bounds(p, grid)
    u = np.asarray(uv.u, dtype=float)
    v = np.asarray(uv.v, dtype=float)
    checks = (
        ("l2_u", float(np.sqrt(grid.h * np.dot(u, u))), l2_u),
        ("l2_v", float(np.sqrt(grid.h * np.dot(v, v))), l2_v),
        ("M1", float(np.max((1.0 + p.alpha * v) * u)), M1),
        ("M2", float(np.max((1.0 + p.alpha * u) * v)), M2),
    )
    violations = []
    for name, value, bound in checks:
        if value > bound * (1.0 + slack) + slack:
            violations.append(f"{name}: {value:.6g} > {bound:.6g}")
    return violations


class SKTSystem:
    """
    スケール付き SKT 系。未知数 x = interleave(σ_w w, σ_z z)。

    残差 R = S r、Jacobian S J S^{-1}（S = diag(σ_w, σ_z) の交互配置）。
    coexistence スケールでは residual_scaled_WZ と一致する。
    """

    def __init__(self, params: ModelParams, grid: Grid, scaling: Scaling = Scaling.COEXISTENCE):
        if params.m.shape != (grid.n,):
            raise PreconditionError("params.m does not match the grid")
        if not params.alpha > 0:
            raise PreconditionError("SKTSystem needs alpha > 0")
        self.params = params
        self.grid = grid
        self.scaling = scaling
        self.sigma_w, self.sigma_z = scaling.factors(params.alpha)
        self._left = interleave(np.full(grid.n, self.sigma_w), np.full(grid.n, self.sigma_z))
        self._right = 1.0 / self._left

    @property
    def dim(self) -> int:
        return 2 * self.grid.n

    def pack(self, state: StateWZ) -> np.ndarray:
        return state.scaled(self.sigma_w, self.sigma_z).to_vector()

    def unpack(self, x: np.ndarray) -> StateWZ:
        return StateWZ.from_vector(np.asarray(x) * self._right)

    def _p(self, lam: float) -> ModelParams:
        return self.params.with_lambda(lam)

    def residual(self, x: np.ndarray, lam: float) -> np.ndarray:
        return self._left * residual_wz(self._p(lam), self.unpack(x), self.grid)

    def jacobian(self, x: np.ndarray, lam: float) -> BandedMatrix:
        return jacobian_wz(self._p(lam), self.unpack(x), self.grid).scaled(self._left, self._right)

    def dparam(self, x: np.ndarray, lam: float) -> np.ndarray:
        return self._left * dparam_wz(self._p(lam), self.unpack(x))

    def admissible(self, x: np.ndarray) -> bool:
        state = self.unpack(x)
        t = state.w - self.params.eps
        return bool(np.all(t * t + 4.0 * state.z >= DISCRIMINANT_FLOOR))

    def noise_floor(self, x: np.ndarray) -> float:
        """丸め誤差で決まる残差の下限"""
        lap_norm = 4.0 / self.grid.h ** 2
        return 16.0 * np.finfo(float).eps * lap_norm * max(1.0, float(np.max(np.abs(x), initial=0.0)))

    def uv(self, x: np.ndarray) -> StateUV:
        return uv_from_wz(self.unpack(x), self.params.eps)
