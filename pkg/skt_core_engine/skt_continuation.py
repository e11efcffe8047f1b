"""
SKT Continuation Engine
SKT 連続体解析 - 擬弧長連続法・分岐検出・分岐乗り換え

拡大未知数 y = (x, λ)（x はスケール付き交互配置ベクトル）に対して
予測子 y0 + ds τ0 と弧長拘束 <τ0, y - y0>_h = ds で補正する。
内積は状態成分に格子幅 h を掛け、パラメータ成分はそのまま。
"""

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigs

try:
    from .skt_types import (BandedMatrix, BifurcationKind, BifurcationRecord, Branch, BranchPoint,
                            ContinuationMode, Grid, ModelParams, NewtonConfig, Scaling, StateUV,
                            StateWZ)
    from .skt_errors import (ConvergenceFailure, NewtonError, PreconditionError, SeedFailure,
                             SingularMatrix, StepFailure, SwitchFailure)
    from .skt_model import SKTSystem, residual_d, residual_wz, uv_from_wz
    from .skt_newton import newton_solve
    from .skt_territory import center_slope_sign, first_hump_sign
    from .skt_numerics import eigen_weighted, factorize, norms, weighted_integral
    from .skt_logging import get_logger, kv
except ImportError:
    import sys
    import os
    sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
    from skt_types import (BandedMatrix, BifurcationKind, BifurcationRecord, Branch, BranchPoint,
                           ContinuationMode, Grid, ModelParams, NewtonConfig, Scaling, StateUV,
                           StateWZ)
    from skt_errors import (ConvergenceFailure, NewtonError, PreconditionError, SeedFailure,
                            SingularMatrix, StepFailure, SwitchFailure)
    from skt_model import SKTSystem, residual_d, residual_wz, uv_from_wz
    from skt_newton import newton_solve
    from skt_territory import center_slope_sign, first_hump_sign
    from skt_numerics import eigen_weighted, factorize, norms, weighted_integral
    from skt_logging import get_logger, kv

logger = get_logger(__name__)

DENSE_EIG_LIMIT = 400
TRIVIAL_TOL = 1e-12
D_VERIFY_TOL = 1e-9


@dataclass
class ContinuationSettings:
    """連続法の調整パラメータ"""
    ds: float = 0.05
    ds_max: float = 5.0
    max_halvings: int = 8
    fast_iterations: int = 3
    n_eigs: int = 6
    localization_tol: float = 1e-4
    max_bisections: int = 60
    max_points: int = 5000
    seed_amplitude: float = 1e-2
    switch_delta: Optional[float] = None
    switch_retries: int = 2
    scaling: Scaling = Scaling.COEXISTENCE
    newton: NewtonConfig = field(default_factory=NewtonConfig)

    def validate(self) -> None:
        if not 0 < self.ds <= self.ds_max:
            raise PreconditionError(f"need 0 < ds <= ds_max, got ds={self.ds}, ds_max={self.ds_max}")
        if self.max_halvings < 0 or self.n_eigs < 1 or self.max_points < 2:
            raise PreconditionError("max_halvings >= 0, n_eigs >= 1 and max_points >= 2 required")
        if self.localization_tol <= 0:
            raise PreconditionError("localization_tol must be positive")
        self.newton.validate()


# --- 固有値監視 ---------------------------------------------------------------

def _start_vector(n: int) -> np.ndarray:
    """ARPACK の初期ベクトル（乱数を使わず再現性を保つ）"""
    i = np.arange(n)
    return 1.0 + 0.5 * np.sin(0.7 * i + 0.3)


def monitor_eigenvalues(jac: BandedMatrix, k: int) -> np.ndarray:
    """原点に近い順に k 個の Jacobian 固有値（複素）"""
    k = min(k, jac.n)
    values = None
    if jac.n > DENSE_EIG_LIMIT and k < jac.n - 1:
        try:
            values = eigs(jac.to_sparse(), k=k, sigma=0.0, which="LM", v0=_start_vector(jac.n),
                          return_eigenvectors=False)
        except (ArpackNoConvergence, ArpackError, RuntimeError) as exc:
            logger.debug(kv("arpack fallback", reason=type(exc).__name__))
            values = None
    if values is None:
        values = np.linalg.eigvals(jac.to_dense())
    order = np.lexsort((np.imag(values), np.real(values), np.abs(values)))
    return np.asarray(values)[order][:k].astype(complex)


def kernel_vector(jac: BandedMatrix) -> np.ndarray:
    """最小固有値に対応する（実）固有ベクトル"""
    vector = None
    if jac.n > DENSE_EIG_LIMIT:
        try:
            _, vecs = eigs(jac.to_sparse(), k=1, sigma=0.0, which="LM", v0=_start_vector(jac.n))
            vector = vecs[:, 0]
        except (ArpackNoConvergence, ArpackError, RuntimeError):
            vector = None
    if vector is None:
        values, vecs = np.linalg.eig(jac.to_dense())
        vector = vecs[:, int(np.argmin(np.abs(values)))]
    vector = vector / vector[int(np.argmax(np.abs(vector)))]
    return np.real(vector)


def _oriented(kernel: np.ndarray) -> np.ndarray:
    """w 成分の最初の有意な値が正になるよう符号を揃える"""
    w_part = kernel[0::2]
    scale = np.max(np.abs(w_part), initial=0.0)
    part = w_part if scale > 1e-8 * np.max(np.abs(kernel)) else kernel
    significant = np.nonzero(np.abs(part) > 1e-3 * np.max(np.abs(part)))[0]
    if significant.size and part[significant[0]] < 0:
        return -kernel
    return kernel


def nodal_count(values: np.ndarray, rel_tol: float = 1e-3) -> int:
    """有意な符号変化の数"""
    values = np.asarray(values, dtype=float)
    scale = np.max(np.abs(values), initial=0.0)
    if scale == 0.0:
        return 0
    signs = np.sign(values[np.abs(values) > rel_tol * scale])
    return int(np.sum(signs[1:] != signs[:-1]))


class ContinuationProcessor:
    """擬弧長連続法による分岐追跡プロセッサ"""

    def __init__(self, params: ModelParams, grid: Grid, settings: Optional[ContinuationSettings] = None):
        self.params = params
        self.grid = grid
        self.settings = settings or ContinuationSettings()
        self.settings.validate()
        self.system = SKTSystem(params, grid, self.settings.scaling)
        self._weights = np.append(np.full(self.system.dim, grid.h), 1.0)

    # --- 内積・拡大系 ---------------------------------------------------------

    def _dot(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.dot(self._weights * a, b))

    def _norm(self, a: np.ndarray) -> float:
        return float(np.sqrt(self._dot(a, a)))

    def _extended(self, point: BranchPoint) -> np.ndarray:
        return np.append(self.system.pack(point.state), point.param)

    def _bordered(self, x: np.ndarray, lam: float, row: np.ndarray) -> sp.csc_matrix:
        jac = self.system.jacobian(x, lam).to_sparse()
        column = sp.csc_matrix(self.system.dparam(x, lam)[:, None])
        last = sp.csc_matrix(row[:-1][None, :])
        corner = sp.csc_matrix(np.array([[row[-1]]]))
        return sp.bmat([[jac, column], [last, corner]], format="csc")

    def _constrained_solve(self, y_start: np.ndarray, row: np.ndarray, target: float,
                           y_ref: np.ndarray):
        """G(x, λ) = 0 と <row, y - y_ref> = target を連立して解く"""
        system = self.system

        def residual(y):
            return np.append(system.residual(y[:-1], y[-1]), np.dot(row, y - y_ref) - target)

        def jacobian(y):
            return self._bordered(y[:-1], y[-1], row)

        return newton_solve(residual, jacobian, y_start, self.settings.newton,
                            admissible=lambda y: system.admissible(y[:-1]),
                            noise_floor=lambda y: system.noise_floor(y[:-1]))

    def tangent(self, x: np.ndarray, lam: float, reference: np.ndarray) -> np.ndarray:
        """単位接ベクトル（reference と同じ向き）"""
        row = self._weights * reference
        rhs = np.zeros(self.system.dim + 1)
        rhs[-1] = 1.0
        tau = factorize(self._bordered(x, lam, row)).solve(rhs)
        tau = tau / self._norm(tau)
        if self._dot(tau, reference) < 0:
            tau = -tau
        return tau

    # --- 点の生成 ---------------------------------------------------------------

    def make_point(self, x: np.ndarray, lam: float, tangent: Optional[np.ndarray],
                   info: Optional[Dict] = None) -> BranchPoint:
        """収束した x から BranchPoint を作る（固有値・行列式符号・残差を付与）"""
        system = self.system
        state = system.unpack(x)
        uv = uv_from_wz(state, self.params.eps)
        l2_u, sup_u = norms(uv.u, self.grid)
        l2_v, sup_v = norms(uv.v, self.grid)
        jac = system.jacobian(x, lam)
        try:
            det_sign = factorize(jac).det_sign
        except SingularMatrix:
            det_sign = 0
        residual = float(np.max(np.abs(residual_wz(self.params.with_lambda(lam), state, self.grid))))
        flags = []
        floor = 1e-10 * max(1.0, sup_u, sup_v)
        if np.min(uv.u) < -floor or np.min(uv.v) < -floor:
            flags.append("nonpositive")
        return BranchPoint(
            param=float(lam), state=state, uv=uv, norms=(l2_u, l2_v, sup_u, sup_v),
            tangent=tangent, eigs=monitor_eigenvalues(jac, self.settings.n_eigs),
            det_sign=det_sign, alpha=self.params.alpha, residual=residual, flags=flags,
            info=dict(info or {}),
        )

    def trivial_point(self, lam: float) -> BranchPoint:
        x = np.zeros(self.system.dim)
        tangent = np.zeros(self.system.dim + 1)
        tangent[-1] = 1.0
        return self.make_point(x, lam, tangent)

    def seed_primary_branch(self, amplitude: Optional[float] = None,
                            window: Optional[Tuple[float, float]] = None) -> BranchPoint:
        """λ1 からの小振幅共存解を種にする"""
        amplitude = self.settings.seed_amplitude if amplitude is None else amplitude
        if not amplitude > 0:
            raise SeedFailure(f"seed amplitude must be positive, got {amplitude}")
        pair = eigen_weighted(self.grid, self.params.m, 1)[0]
        lam1, phi = pair.value, pair.vector
        if window is not None and not window[0] < lam1 < window[1]:
            raise SeedFailure(f"lambda_1={lam1:.6g} lies outside the window {window}")
        lam = lam1 * (1.0 + amplitude)
        m = self.params.m
        s = (lam - lam1) * weighted_integral(self.grid, m * phi ** 2) / \
            (lam * weighted_integral(self.grid, m * phi ** 3))
        eps = self.params.eps
        guess = StateWZ(w=np.zeros(self.grid.n), z=eps * eps * s * phi)
        x0 = self.system.pack(guess)
        system = self.system
        try:
            rep = newton_solve(lambda x: system.residual(x, lam), lambda x: system.jacobian(x, lam),
                               x0, self.settings.newton, admissible=system.admissible,
                               noise_floor=system.noise_floor)
        except (NewtonError, PreconditionError) as exc:
            raise SeedFailure(f"seed Newton failed: {exc}") from exc
        x = rep.final_state
        if np.max(np.abs(x)) <= 1e-3 * np.max(np.abs(x0)):
            raise SeedFailure("seed collapsed onto the trivial solution")
        reference = np.zeros(system.dim + 1)
        reference[-1] = 1.0
        point = self.make_point(x, lam, self.tangent(x, lam, reference), {"seed_amplitude": amplitude})
        logger.info(kv("seed", lam=lam, lam1=lam1, sup_u=point.norms[2]))
        return point

    # --- 1 ステップ -------------------------------------------------------------

    def _correct(self, point: BranchPoint, ds: float) -> Tuple[np.ndarray, int]:
        y0 = self._extended(point)
        tau0 = point.tangent
        row = self._weights * tau0
        rep = self._constrained_solve(y0 + ds * tau0, row, ds, y0)
        y = rep.final_state
        if self._norm(y - y0) > 2.0 * abs(ds):
            raise NewtonError(f"corrector drifted {self._norm(y - y0):.3e} for ds={ds:.3e}")
        return y, rep.iterations

    def arclength_step(self, point: BranchPoint, ds: float) -> BranchPoint:
        """予測子-補正子の 1 ステップ。失敗時は ds を半減して再試行"""
        if point.tangent is None:
            raise PreconditionError("arclength_step needs a point with a tangent")
        step = ds
        for attempt in range(self.settings.max_halvings + 1):
            try:
                y, iterations = self._correct(point, step)
                break
            except (NewtonError, PreconditionError) as exc:
                logger.debug(kv("step rejected", ds=step, reason=type(exc).__name__))
                step *= 0.5
        else:
            raise StepFailure(f"step failed after {self.settings.max_halvings} halvings "
                              f"at param={point.param:.6g}")
        x, lam = y[:-1], float(y[-1])
        tangent = self.tangent(x, lam, point.tangent)
        grow = iterations <= self.settings.fast_iterations
        ds_next = min(2.0 * step, self.settings.ds_max) if grow else step
        return self.make_point(x, lam, tangent, {"ds_used": step, "ds_next": ds_next,
                                                 "iterations": iterations, "halvings": attempt})

    # --- 分岐検出 ---------------------------------------------------------------

    def _crossing_count(self, a: BranchPoint, b: BranchPoint) -> int:
        if a.eigs.size and b.eigs.size:
            radius = min(np.max(np.abs(a.eigs)), np.max(np.abs(b.eigs)))
            change = abs(b.unstable_count(radius) - a.unstable_count(radius))
            confirm = abs(b.unstable_count(0.5 * radius) - a.unstable_count(0.5 * radius))
        else:
            change = confirm = 0
        flipped = a.det_sign * b.det_sign < 0
        if flipped:
            return change if change % 2 == 1 else 1
        if change >= 2 and change % 2 == 0 and confirm == change:
            return change
        return 0

    def _kind(self, a: BranchPoint, b: BranchPoint) -> BifurcationKind:
        xa = self.system.pack(a.state)
        xb = self.system.pack(b.state)
        if np.max(np.abs(xa)) <= TRIVIAL_TOL and np.max(np.abs(xb)) <= TRIVIAL_TOL:
            return BifurcationKind.SIMPLE_FROM_TRIVIAL
        if a.tangent is not None and b.tangent is not None and a.tangent[-1] * b.tangent[-1] < 0:
            return BifurcationKind.FOLD
        return BifurcationKind.PITCHFORK

    def detect_and_localize(self, a: BranchPoint, b: BranchPoint,
                            index: int = 0) -> Optional[BifurcationRecord]:
        """a, b 間の固有値の虚軸横断を検出し、弧長の二分法で局在化する"""
        crossings = self._crossing_count(a, b)
        if crossings == 0:
            return None
        kind = self._kind(a, b)
        ds = b.info.get("ds_used")
        if ds is None:
            ds = self._norm(self._extended(b) - self._extended(a))
        lo, hi = 0.0, float(ds)
        lo_point, hi_point = a, b
        for _ in range(self.settings.max_bisections):
            if abs(hi_point.param - lo_point.param) <= self.settings.localization_tol:
                break
            mid = 0.5 * (lo + hi)
            try:
                y, _ = self._correct(a, mid)
            except (NewtonError, PreconditionError):
                logger.warning(kv("localization stopped", lo=lo_point.param, hi=hi_point.param))
                break
            x, lam = y[:-1], float(y[-1])
            mid_point = self.make_point(x, lam, self.tangent(x, lam, a.tangent))
            if self._crossing_count(a, mid_point) > 0:
                hi, hi_point = mid, mid_point
            else:
                lo, lo_point = mid, mid_point
        if kind is not BifurcationKind.FOLD and lo_point.tangent is not None \
                and hi_point.tangent is not None and lo_point.tangent[-1] * hi_point.tangent[-1] < 0:
            kind = BifurcationKind.FOLD
        closest = min((lo_point, hi_point), key=lambda p: np.min(np.abs(p.eigs)) if p.eigs.size else 0.0)
        x = self.system.pack(closest.state)
        kernel = _oriented(kernel_vector(self.system.jacobian(x, closest.param)))
        kernel = kernel / np.sqrt(self.grid.h * np.dot(kernel, kernel))
        record = BifurcationRecord(
            param_at=0.5 * (lo_point.param + hi_point.param), kernel=kernel, kind=kind,
            localization_width=abs(hi_point.param - lo_point.param), point=closest,
            index=index, crossings=crossings,
        )
        logger.info(kv("bifurcation", kind=kind.value, param=record.param_at,
                       width=record.localization_width, crossings=crossings))
        return record

    # --- 分岐追跡 ---------------------------------------------------------------

    def trace_branch(self, seed: BranchPoint, window: Tuple[float, float], branch_id: str = "C",
                     parent: Optional[Tuple[str, float]] = None) -> Branch:
        """窓を出るまで追跡し、途中の分岐を記録する"""
        lo, hi = window
        if not lo < hi:
            raise PreconditionError(f"empty window {window}")
        if seed.tangent is None:
            raise PreconditionError("seed point needs a tangent")
        branch = Branch(id=branch_id, mode=ContinuationMode.LAMBDA, params=self.params,
                        grid=self.grid, parent=parent, points=[seed],
                        meta={"scaling": self.settings.scaling.value, "rejected_steps": 0})
        current = seed
        ds = self.settings.ds
        warned = False
        while len(branch.points) < self.settings.max_points:
            try:
                nxt = self.arclength_step(current, ds)
            except StepFailure as exc:
                exc.partial = branch
                logger.warning(kv("step failure", branch=branch_id, param=current.param))
                raise
            record = self.detect_and_localize(current, nxt, index=len(branch.points))
            if record is not None:
                branch.bifurcations.append(record)
            branch.points.append(nxt)
            branch.meta["rejected_steps"] += nxt.info.get("halvings", 0)
            if "nonpositive" in nxt.flags and not warned:
                logger.warning(kv("positivity lost", branch=branch_id, param=nxt.param))
                warned = True
            if not lo <= nxt.param <= hi:
                break
            current = nxt
            ds = nxt.info.get("ds_next", ds)
        logger.info(kv("branch traced", id=branch_id, points=len(branch.points),
                       records=len(branch.bifurcations)))
        return branch

    def trivial_branch(self, window: Tuple[float, float]) -> Branch:
        """自明解 (0, 0) を追跡して λ_j の交差を記録する"""
        seed = self.trivial_point(window[0])
        return self.trace_branch(seed, window, branch_id="T")

    # --- 分岐乗り換え -----------------------------------------------------------

    def _distance_to_base(self, y: np.ndarray, bases: List[BranchPoint]) -> float:
        best = np.inf
        for base in bases:
            y_b = self._extended(base)
            diff = y - y_b
            if base.tangent is not None:
                diff = diff - self._dot(diff, base.tangent) * base.tangent
            best = min(best, self._norm(diff))
        return best

    def switch_branch(self, record: BifurcationRecord, delta: Optional[float] = None,
                      base_branch: Optional[Branch] = None
                      ) -> Tuple[Optional[BranchPoint], Optional[BranchPoint]]:
        """
        分岐点から両側 (+, -) の新しい枝に乗る。

        片側だけ元の枝に戻った場合はその側を None にする。両側とも失敗したら SwitchFailure。
        """
        if record.kind is BifurcationKind.FOLD:
            raise SwitchFailure("fold points are not branch points")
        if delta is not None and not delta > 0:
            raise SwitchFailure(f"switch delta must be positive, got {delta}")
        found: List[Optional[BranchPoint]] = []
        for sign in (1, -1):
            try:
                found.append(self.switch_side(record, sign=sign, delta=delta,
                                              base_branch=base_branch))
            except SwitchFailure as exc:
                logger.warning(kv("switch failed", param=record.param_at, sign=sign,
                                  reason=str(exc)))
                found.append(None)
        if found[0] is None and found[1] is None:
            raise SwitchFailure(f"both sides fell back onto the base branch at "
                                f"param={record.param_at:.6g}")
        return found[0], found[1]

    def switch_side(self, record: BifurcationRecord, sign: int = 1, delta: Optional[float] = None,
                    base_branch: Optional[Branch] = None) -> BranchPoint:
        """分岐点の核方向に sign·δ ずらした拘束付き Newton で片側の枝に乗る"""
        if record.kind is BifurcationKind.FOLD:
            raise SwitchFailure("fold points are not branch points")
        base = record.point
        y_b = self._extended(base)
        tau = base.tangent
        if tau is None:
            reference = np.zeros(self.system.dim + 1)
            reference[-1] = 1.0
            tau = self.tangent(y_b[:-1], base.param, reference)
        phi = np.append(record.kernel, 0.0)
        phi = phi - self._dot(phi, tau) * tau
        phi = phi / self._norm(phi)
        if delta is None:
            delta = self.settings.switch_delta
        if delta is None:
            delta = max(1e-3, 1e-2 * float(np.max(np.abs(y_b[:-1]), initial=0.0)))
        bases = [base]
        if base_branch is not None:
            bases.extend(p for p in base_branch.points
                         if abs(p.param - base.param) <= 10.0 * delta + 1.0)
        row = self._weights * phi
        tol = self.settings.newton.tol_residual
        for attempt in range(self.settings.switch_retries + 1):
            d = delta * 2.0 ** attempt
            target = sign * d
            try:
                rep = self._constrained_solve(y_b + target * phi, row, target, y_b)
            except (NewtonError, PreconditionError) as exc:
                logger.debug(kv("switch retry", delta=d, reason=type(exc).__name__))
                continue
            y = rep.final_state
            distance = self._distance_to_base(y, bases)
            if distance > max(10.0 * tol, 0.25 * d):
                x, lam = y[:-1], float(y[-1])
                point = self.make_point(x, lam, self.tangent(x, lam, sign * phi),
                                        {"switched_from": record.param_at, "delta": d})
                logger.info(kv("switched", param=lam, delta=d, sign=sign))
                return point
            logger.debug(kv("switch collapsed", delta=d, distance=distance))
        raise SwitchFailure(f"could not leave the base branch at param={record.param_at:.6g}")

    def child_label(self, point: BranchPoint) -> str:
        """子枝の名前 'S{j}{±}'（j は w の節点数 + 1）"""
        w = point.uv.u - point.uv.v
        j = nodal_count(w) + 1
        sign = center_slope_sign(w) if j % 2 == 0 else first_hump_sign(w)
        return f"S{j}{'+' if sign > 0 else '-'}"

    def trace_family(self, seed: BranchPoint, window: Tuple[float, float],
                     max_depth: int = 1) -> List[Branch]:
        """主枝と、各ピッチフォークからの子枝（両側）を追跡する"""
        main = self.trace_branch(seed, window, branch_id="C")
        family = [main]
        self._trace_children(main, window, max_depth, family)
        return family

    def _trace_children(self, branch: Branch, window, depth: int, family: List[Branch]) -> None:
        if depth <= 0:
            return
        used = {b.id for b in family}
        for record in branch.bifurcations:
            if record.kind is not BifurcationKind.PITCHFORK:
                continue
            try:
                starts = self.switch_branch(record, base_branch=branch)
            except SwitchFailure:
                continue
            for start in starts:
                if start is None:
                    continue
                label = self.child_label(start)
                while label in used:
                    label = label + "'"
                used.add(label)
                parent = (branch.id, record.param_at)
                try:
                    child = self.trace_branch(start, window, branch_id=label, parent=parent)
                except StepFailure as exc:
                    child = exc.partial
                    child.meta["truncated"] = True
                family.append(child)
                self._trace_children(child, window, depth - 1, family)

    # --- 補間 ---------------------------------------------------------------

    def point_at(self, branch: Branch, param: float) -> BranchPoint:
        """枝上で param を挟む 2 点から補間し、固定パラメータで補正する"""
        points = branch.points
        for left, right in zip(points[:-1], points[1:]):
            if (left.param - param) * (right.param - param) <= 0 and left.param != right.param:
                break
        else:
            raise PreconditionError(f"param {param} is not bracketed by branch {branch.id}")
        theta = (param - left.param) / (right.param - left.param)
        x0 = (1.0 - theta) * self.system.pack(left.state) + theta * self.system.pack(right.state)
        system = self.system
        try:
            rep = newton_solve(lambda x: system.residual(x, param), lambda x: system.jacobian(x, param),
                               x0, self.settings.newton, admissible=system.admissible,
                               noise_floor=system.noise_floor)
        except NewtonError as exc:
            raise StepFailure(f"correction at param={param} failed: {exc}") from exc
        reference = left.tangent if left.tangent is not None else np.append(np.zeros(system.dim), 1.0)
        x = rep.final_state
        return self.make_point(x, param, self.tangent(x, param, reference))


# --- d-mode 変換 -------------------------------------------------------------

def _secant_tangents(vectors: List[np.ndarray], weights: np.ndarray) -> List[np.ndarray]:
    tangents = []
    count = len(vectors)
    for i in range(count):
        if count == 1:
            tau = np.zeros_like(vectors[0])
            tau[-1] = 1.0
        else:
            a = vectors[max(i - 1, 0)]
            b = vectors[min(i + 1, count - 1)]
            tau = b - a
            norm = np.sqrt(np.dot(weights * tau, tau))
            tau = tau / norm if norm > 0 else tau
        tangents.append(tau)
    return tangents


def _map_point(point: BranchPoint, grid: Grid) -> BranchPoint:
    """(λ, u, v) <-> (d, u/λ, v/λ)。state は λ 形式の (w, z) のまま保持する"""
    factor = point.param
    if not factor > 0:
        raise PreconditionError("mode conversion needs a positive parameter")
    # λ -> d でも d -> λ でも同じ形（割る量は元のパラメータ）
    uv = StateUV(u=point.uv.u / factor, v=point.uv.v / factor)
    l2_u, sup_u = norms(uv.u, grid)
    l2_v, sup_v = norms(uv.v, grid)
    return replace(point, param=1.0 / factor, uv=uv, norms=(l2_u, l2_v, sup_u, sup_v),
                   flags=list(point.flags), info=dict(point.info))


def _map_branch(branch: Branch, target: ContinuationMode) -> Branch:
    """枝全体の写像。d = 1/λ"""
    grid = branch.grid
    points = [_map_point(point, grid) for point in branch.points]
    weights = np.append(np.full(2 * grid.n, grid.h), 1.0)
    vectors = [np.append(p.state.to_vector(), p.param) for p in points]
    for point, tau in zip(points, _secant_tangents(vectors, weights)):
        point.tangent = tau
    records = []
    for record in branch.bifurcations:
        lam = record.param_at
        records.append(replace(record, param_at=1.0 / lam,
                               localization_width=record.localization_width / lam ** 2,
                               point=_map_point(record.point, grid)))
    return Branch(id=branch.id, mode=target, params=branch.params, grid=grid,
                  parent=(branch.parent[0], 1.0 / branch.parent[1]) if branch.parent else None,
                  points=points, bifurcations=records, meta=dict(branch.meta))


def d_mode_residual(params: ModelParams, d: float, uv: StateUV, grid: Grid) -> Tuple[float, float]:
    """拡散形式の残差の sup と、丸め誤差で決まるその下限"""
    r1, r2 = residual_d(params, d, uv, grid)
    flux = np.concatenate([(d + params.alpha * uv.v) * uv.u, (d + params.alpha * uv.u) * uv.v])
    floor = 64.0 * np.finfo(float).eps * (4.0 / grid.h ** 2) \
        * max(1.0, float(np.max(np.abs(flux), initial=0.0)))
    return float(max(np.max(np.abs(r1)), np.max(np.abs(r2)))), floor


def _reconverge(branch: Branch, point: BranchPoint) -> BranchPoint:
    """λ 形式で固定パラメータの Newton をやり直す"""
    scaling = Scaling(branch.meta.get("scaling", Scaling.COEXISTENCE.value))
    system = SKTSystem(branch.params, branch.grid, scaling)
    lam = point.param
    try:
        rep = newton_solve(lambda x: system.residual(x, lam), lambda x: system.jacobian(x, lam),
                           system.pack(point.state), NewtonConfig(), admissible=system.admissible,
                           noise_floor=system.noise_floor)
    except (NewtonError, PreconditionError) as exc:
        raise ConvergenceFailure(f"point at lambda={lam:.6g} could not be re-converged: "
                                 f"{exc}") from exc
    state = system.unpack(rep.final_state)
    uv = uv_from_wz(state, branch.params.eps)
    p = branch.params.with_lambda(lam)
    residual = float(np.max(np.abs(residual_wz(p, state, branch.grid))))
    info = dict(point.info, reconverged=rep.iterations)
    return replace(point, state=state, uv=uv, residual=residual, info=info)


def to_d_mode(branch: Branch, tol: float = D_VERIFY_TOL) -> Branch:
    """
    λ-mode の枝を d-mode に写し、拡散形式の残差で各点を再検証する。

    残差が大きい点は λ 形式で Newton をやり直してから写し直す。
    それでも満たさなければ ConvergenceFailure。
    """
    if branch.mode is not ContinuationMode.LAMBDA:
        raise PreconditionError("branch is already in d-mode")
    sources = list(branch.points)
    for k, source in enumerate(sources):
        mapped = _map_point(source, branch.grid)
        res, floor = d_mode_residual(branch.params, mapped.param, mapped.uv, branch.grid)
        if res > max(tol, floor):
            logger.warning(kv("d-mode residual", d=mapped.param, res=res))
            sources[k] = _reconverge(branch, source)
    result = _map_branch(replace(branch, points=sources), ContinuationMode.D)
    for point in result.points:
        res, floor = d_mode_residual(branch.params, point.param, point.uv, branch.grid)
        if res > max(tol, floor):
            raise ConvergenceFailure(f"mapped point at d={point.param:.6g} "
                                     f"keeps residual {res:.3e}")
        point.residual = res
    return result


def from_d_mode(branch: Branch) -> Branch:
    """d-mode の枝を λ-mode に戻す（残差は λ 形式で付け直す）"""
    if branch.mode is not ContinuationMode.D:
        raise PreconditionError("branch is not in d-mode")
    mapped = _map_branch(branch, ContinuationMode.LAMBDA)
    for point in mapped.points:
        p = branch.params.with_lambda(point.param)
        point.residual = float(np.max(np.abs(residual_wz(p, point.state, branch.grid))))
    return mapped
