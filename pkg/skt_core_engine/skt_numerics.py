"""
SKT Numerics Kernel
SKT 連続体解析 - 格子・差分ラプラシアン・帯行列ソルバー・重み付き固有値
"""

from typing import List, Tuple, Union

import numpy as np
from typing_extensions import TypeAlias
import scipy.sparse as sp
from scipy.linalg import LinAlgError, cholesky_banded, cho_solve_banded, eigh_tridiagonal, solveh_banded
from scipy.sparse.linalg import splu

try:
    from .skt_types import BandedMatrix, EigenPair, Grid
    from .skt_errors import ConvergenceFailure, PreconditionError, SingularMatrix
    from .skt_logging import get_logger, kv
except ImportError:
    import sys
    import os
    sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
    from skt_types import BandedMatrix, EigenPair, Grid
    from skt_errors import ConvergenceFailure, PreconditionError, SingularMatrix
    from skt_logging import get_logger, kv

logger = get_logger(__name__)

PIVOT_RTOL = 1e-14
EIG_RESIDUAL_TOL = 1e-9

MatrixLike: TypeAlias = Union[BandedMatrix, np.ndarray, sp.spmatrix]


def build_grid(a: float, b: float, n: int) -> Grid:
    """一様格子の生成"""
    return Grid(a=float(a), b=float(b), n=int(n))


def discrete_laplacian(grid: Grid) -> BandedMatrix:
    """-Δ の 3 点差分（対角 2/h^2、副対角 -1/h^2）"""
    inv_h2 = 1.0 / grid.h ** 2
    off = np.full(grid.n - 1, -inv_h2)
    return BandedMatrix.from_diagonals(grid.n, {-1: off, 0: np.full(grid.n, 2.0 * inv_h2), 1: off})


def apply_laplacian(grid: Grid, f: np.ndarray) -> np.ndarray:
    """(-Δ_h f)_i をベクトル演算で（境界値 0）"""
    f = np.asarray(f, dtype=float)
    out = 2.0 * f
    out[1:] -= f[:-1]
    out[:-1] -= f[1:]
    return out / grid.h ** 2


def laplacian_solve(grid: Grid, rhs: np.ndarray) -> np.ndarray:
    """A x = rhs を Cholesky（対称正定値帯）で解く"""
    inv_h2 = 1.0 / grid.h ** 2
    ab = np.empty((2, grid.n))
    ab[0, 0] = 0.0
    ab[0, 1:] = -inv_h2
    ab[1, :] = 2.0 * inv_h2
    return solveh_banded(ab, np.asarray(rhs, dtype=float))


def _permutation_parity(perm: np.ndarray) -> int:
    """置換の符号 (+1/-1)"""
    perm = np.asarray(perm)
    seen = np.zeros(perm.size, dtype=bool)
    transpositions = 0
    for start in range(perm.size):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        transpositions += length - 1
    return -1 if transpositions % 2 else 1


def _as_csc(matrix: MatrixLike) -> sp.csc_matrix:
    if isinstance(matrix, BandedMatrix):
        return matrix.to_sparse()
    if sp.issparse(matrix):
        return sp.csc_matrix(matrix)
    return sp.csc_matrix(np.asarray(matrix, dtype=float))


class LUFactorization:
    """部分ピボット LU（SuperLU）。行列式の符号と解法を提供する"""

    def __init__(self, matrix: MatrixLike):
        self.matrix = _as_csc(matrix)
        n_rows, n_cols = self.matrix.shape
        if n_rows != n_cols or n_rows == 0:
            raise PreconditionError(f"square non-empty matrix required, got {self.matrix.shape}")
        self.n = n_rows
        row_scale = np.asarray(np.abs(self.matrix).sum(axis=1)).ravel()
        self.scale = float(row_scale.max()) if row_scale.size else 0.0
        if self.scale == 0.0:
            raise SingularMatrix("zero matrix")
        try:
            self._lu = splu(self.matrix, permc_spec="NATURAL")
        except RuntimeError as exc:
            raise SingularMatrix(str(exc)) from exc
        pivots = self._lu.U.diagonal()
        small = np.abs(pivots) < PIVOT_RTOL * self.scale
        if np.any(small):
            node = int(np.argmax(small))
            raise SingularMatrix(f"pivot {pivots[node]:.3e} at row {node} below tolerance")
        sign = int(np.prod(np.sign(pivots)))
        parity = _permutation_parity(self._lu.perm_r) * _permutation_parity(self._lu.perm_c)
        self.det_sign = sign * parity

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        x = self._lu.solve(rhs)
        # 1 回の反復改良
        residual = rhs - self.matrix @ x
        bound = 1e-10 * (self.scale * np.max(np.abs(x), initial=0.0) + np.max(np.abs(rhs), initial=0.0))
        if np.max(np.abs(residual), initial=0.0) > bound:
            x = x + self._lu.solve(residual)
        return x


def factorize(matrix: MatrixLike) -> LUFactorization:
    return LUFactorization(matrix)


def solve_banded(matrix: BandedMatrix, rhs: np.ndarray, return_det_sign: bool = False):
    """帯行列の線形方程式を解く（必要なら det(A) の符号も返す）"""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != matrix.n:
        raise PreconditionError(f"rhs has length {rhs.shape[0]}, matrix is {matrix.n}x{matrix.n}")
    lu = factorize(matrix)
    x = lu.solve(rhs)
    if return_det_sign:
        return x, lu.det_sign
    return x


def is_spd(matrix: BandedMatrix) -> bool:
    """対称帯行列が正定値か（帯 Cholesky が通るか）"""
    if matrix.lower != matrix.upper:
        return False
    upper_form = matrix.ab[:matrix.upper + 1]
    try:
        cholesky_banded(upper_form, lower=False)
    except LinAlgError:
        return False
    return True


def spd_solve(matrix: BandedMatrix, rhs: np.ndarray) -> np.ndarray:
    upper_form = matrix.ab[:matrix.upper + 1]
    factor = cholesky_banded(upper_form, lower=False)
    return cho_solve_banded((factor, False), np.asarray(rhs, dtype=float))


def eigen_weighted(grid: Grid, m: np.ndarray, k: int) -> List[EigenPair]:
    """
    重み付き固有値問題 A φ = μ diag(m) φ の小さい方から k 個。

    diag(m)^{-1/2} による相似変換で対称三重対角にし、
    Sturm 二分法 + 逆反復（LAPACK stebz/stein）で解く。
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (grid.n,):
        raise PreconditionError(f"weight has {m.size} values, grid has {grid.n}")
    if np.any(m <= 0) or not np.all(np.isfinite(m)):
        raise PreconditionError("weight must be strictly positive for the eigenproblem")
    if not 1 <= k <= grid.n:
        raise PreconditionError(f"k must lie in [1, {grid.n}], got {k}")

    inv_h2 = 1.0 / grid.h ** 2
    root = np.sqrt(m)
    diag = 2.0 * inv_h2 / m
    off = -inv_h2 / (root[:-1] * root[1:])
    try:
        values, vectors = eigh_tridiagonal(
            diag, off, select="i", select_range=(0, k - 1),
            lapack_driver="stebz", tol=2.0 * np.finfo(float).tiny,
        )
    except LinAlgError as exc:
        raise ConvergenceFailure(f"inverse iteration failed: {exc}") from exc

    lap = discrete_laplacian(grid)
    scale = lap.norm_inf()
    pairs = []
    for index in range(k):
        phi = vectors[:, index] / root
        phi = phi / np.max(np.abs(phi))
        if phi[0] < 0:
            phi = -phi
        mu = float(values[index])
        residual = np.max(np.abs(apply_laplacian(grid, phi) - mu * m * phi))
        if residual > EIG_RESIDUAL_TOL * scale:
            raise ConvergenceFailure(f"eigenpair {index + 1} residual {residual:.3e}")
        pairs.append(EigenPair(value=mu, vector=phi, index=index + 1))
    logger.debug(kv("eigen_weighted", n=grid.n, k=k, mu1=pairs[0].value))
    return pairs


def norms(field: np.ndarray, grid: Grid) -> Tuple[float, float]:
    """(L2, sup)。L2 は h 重みの離散ノルム"""
    field = np.asarray(field, dtype=float)
    if field.size == 0:
        return 0.0, 0.0
    return float(np.sqrt(grid.h * np.dot(field, field))), float(np.max(np.abs(field)))


def weighted_integral(grid: Grid, f: np.ndarray) -> float:
    """∫ f dx の台形則（境界値 0）"""
    return float(grid.h * np.sum(f))
