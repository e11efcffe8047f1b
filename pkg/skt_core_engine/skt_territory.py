#!/usr/bin/env python3
"""
SKT Territory Analysis - SKT 連続体解析 すみ分け解析

w = u - v の符号で区間を u の縄張り / v の縄張りに分ける：
- 境界：w の零点（隣接節点間の線形補間）
- パターン：左から順に優勢な種を並べた文字列（例 "uv", "uvu"）
- 重なり指標 |uv|_inf / (|u|_inf |v|_inf)：共存なら O(1)、すみ分けなら 0 に近づく
"""

from typing import List

import numpy as np

try:
    from .skt_types import Grid, StateUV, TerritoryInfo
    from .skt_errors import PreconditionError
except ImportError:
    import sys
    import os
    sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
    from skt_types import Grid, StateUV, TerritoryInfo
    from skt_errors import PreconditionError

SIGNIFICANCE = 1e-3


def _interfaces(x: np.ndarray, w: np.ndarray, threshold: float) -> List[float]:
    """有意な符号変化の位置"""
    keep = np.nonzero(np.abs(w) > threshold)[0]
    points = []
    for left, right in zip(keep[:-1], keep[1:]):
        if np.sign(w[left]) == np.sign(w[right]):
            continue
        # left..right の間で最後に符号が変わる隣接対を線形補間
        seg = np.arange(left, right)
        flips = seg[np.sign(w[seg]) != np.sign(w[seg + 1])]
        i = int(flips[0]) if flips.size else left
        xa, xb, wa, wb = x[i], x[i + 1], w[i], w[i + 1]
        points.append(float(xa - wa * (xb - xa) / (wb - wa)) if wb != wa else float(xa))
    return points


def _center(x: np.ndarray, f: np.ndarray) -> float:
    mass = float(np.sum(f))
    return float(np.dot(x, f) / mass) if mass > 0 else float("nan")


def analyze_territory(uv: StateUV, grid: Grid) -> TerritoryInfo:
    """縄張り境界・パターン・占有率・重心・重なり指標を求める"""
    u = np.asarray(uv.u, dtype=float)
    v = np.asarray(uv.v, dtype=float)
    if u.shape != (grid.n,) or v.shape != (grid.n,):
        raise PreconditionError("profile does not match the grid")
    x = grid.x
    w = u - v
    scale = float(np.max(np.abs(w), initial=0.0))
    sup_u = float(np.max(np.abs(u), initial=0.0))
    sup_v = float(np.max(np.abs(v), initial=0.0))
    overlap = float(np.max(np.abs(u * v))) / (sup_u * sup_v) if sup_u > 0 and sup_v > 0 else 0.0

    if scale <= 1e-12 * max(1.0, sup_u, sup_v):
        # u と v が一致：縄張りなし
        return TerritoryInfo(interfaces=[], pattern="=", u_fraction=0.0, v_fraction=0.0,
                             u_center=_center(x, u), v_center=_center(x, v), overlap=overlap)

    threshold = SIGNIFICANCE * scale
    interfaces = _interfaces(x, w, threshold)
    signs = np.sign(w[np.abs(w) > threshold])
    pattern = "".join("u" if s > 0 else "v" for i, s in enumerate(signs) if i == 0 or s != signs[i - 1])
    u_fraction = float(np.sum(w > threshold)) / grid.n
    v_fraction = float(np.sum(w < -threshold)) / grid.n
    return TerritoryInfo(interfaces=interfaces, pattern=pattern, u_fraction=u_fraction,
                         v_fraction=v_fraction, u_center=_center(x, u), v_center=_center(x, v),
                         overlap=overlap)


def is_reflection_of(a: np.ndarray, b: np.ndarray, grid: Grid, tol: float = 1e-8) -> bool:
    """a(x) = b(-x) か（対称区間のみ）"""
    if not grid.is_symmetric():
        raise PreconditionError("reflection needs a domain symmetric about 0")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
    return bool(np.max(np.abs(a - grid.reflect(b)), initial=0.0) <= tol * scale)


def first_hump_sign(w: np.ndarray) -> int:
    """左端に接する有意なこぶの符号"""
    w = np.asarray(w, dtype=float)
    scale = float(np.max(np.abs(w), initial=0.0))
    if scale == 0.0:
        return 0
    index = np.nonzero(np.abs(w) > SIGNIFICANCE * scale)[0][0]
    return int(np.sign(w[index]))


def center_slope_sign(w: np.ndarray) -> int:
    """区間中央での w' の符号（中心差分）"""
    w = np.asarray(w, dtype=float)
    n = w.size
    center = n // 2
    if n % 2 == 1:
        slope = w[center + 1] - w[center - 1]
    else:
        slope = w[center] - w[center - 1]
    return int(np.sign(slope))
