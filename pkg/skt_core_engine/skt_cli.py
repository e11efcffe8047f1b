"""
SKT Command Line Interface
SKT 連続体解析 - コマンドライン

  skt-continuation trace   --config run.toml [--window 9.5:100]
  skt-continuation switch  --branch out/branches/C.json --record 1 --sign +
  skt-continuation sweep   --branch out/branches/C.json --lambda 20 --alphas 20,50,100
  skt-continuation limits  --lambda 20,100
  skt-continuation shoot   --lambda 43.0673 --j 2 --sign +
  skt-continuation eigs    --k 6
  skt-continuation plot    --diagram out/branches/
  skt-continuation verify  --dir out/branches/

終了コード：0 成功、1 ソルバー失敗、2 設定・使用法の誤り。
"""

import argparse
import os
import sys
from dataclasses import replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

try:
    from .skt_types import Branch, ContinuationMode, Scaling
    from .skt_errors import ConfigError, PreconditionError, SKTError, UsageError
    from .skt_config import RunConfig, load_config, validate_config
    from .skt_continuation import ContinuationProcessor, d_mode_residual
    from .skt_classifier import BranchSelector
    from .skt_engine import SKTCoreEngine, create_skt_engine
    from .skt_limits import shoot_LS2
    from .skt_numerics import eigen_weighted
    from .skt_model import check_apriori, residual_wz
    from .skt_io import (canonical_json_bytes, read_branch, read_branches, utc_now, write_branch,
                         write_manifest, write_profile, write_sweep_report)
    from .skt_svg import emit_svg
    from .skt_logging import set_level
except ImportError:
    sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
    from skt_types import Branch, ContinuationMode, Scaling
    from skt_errors import ConfigError, PreconditionError, SKTError, UsageError
    from skt_config import RunConfig, load_config, validate_config
    from skt_continuation import ContinuationProcessor, d_mode_residual
    from skt_classifier import BranchSelector
    from skt_engine import SKTCoreEngine, create_skt_engine
    from skt_limits import shoot_LS2
    from skt_numerics import eigen_weighted
    from skt_model import check_apriori, residual_wz
    from skt_io import (canonical_json_bytes, read_branch, read_branches, utc_now, write_branch,
                        write_manifest, write_profile, write_sweep_report)
    from skt_svg import emit_svg
    from skt_logging import set_level

VERSION = "1.0.0"
VERIFY_TOL = 1e-9

SUBCOMMANDS = ("trace", "switch", "sweep", "limits", "shoot", "eigs", "plot", "verify")


class _Parser(argparse.ArgumentParser):
    """argparse の終了を UsageError に置き換える"""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from exc


def _window(text: str) -> Tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected LOW:HIGH, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected LOW:HIGH, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="skt-continuation", description="SKT cross-diffusion continuation toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    common = _Parser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--out", help="output directory (overrides [output] directory)")
    common.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("trace", parents=[common], help="trace the bifurcation diagram")
    p.add_argument("--window", type=_window)
    p.add_argument("--max-depth", type=int)
    p.add_argument("--no-trivial", action="store_true")

    p = sub.add_parser("switch", parents=[common], help="switch at a stored bifurcation record")
    p.add_argument("--branch", required=True)
    p.add_argument("--record", type=int, default=0)
    p.add_argument("--sign", choices=["+", "-"], default="+")
    p.add_argument("--window", type=_window)

    p = sub.add_parser("sweep", parents=[common], help="alpha sweep at fixed lambda")
    p.add_argument("--branch", required=True)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--alphas", type=_floats)
    p.add_argument("--kind", choices=["coexistence", "segregation"])
    p.add_argument("--j", type=int)
    p.add_argument("--sign", choices=["+", "-"])

    p = sub.add_parser("limits", parents=[common], help="limiting profiles at a lambda list")
    p.add_argument("--lambda", dest="lams", type=_floats, required=True)

    p = sub.add_parser("shoot", parents=[common], help="shooting solution of the segregation limit")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--sign", choices=["+", "-"], required=True)

    p = sub.add_parser("eigs", parents=[common], help="weighted Dirichlet eigenvalues")
    p.add_argument("--k", type=int, default=6)

    p = sub.add_parser("plot", parents=[common], help="emit SVG plots")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--diagram", help="directory of branch JSON files")
    group.add_argument("--profile", help="branch JSON file")
    p.add_argument("--param", type=float, help="parameter of the plotted profile")
    p.add_argument("--output", help="SVG path")

    p = sub.add_parser("verify", parents=[common], help="re-check stored branches")
    p.add_argument("--dir", required=True)
    return parser


class _Run:
    """1 回の実行の文脈（設定・出力先・書いたファイル）"""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        if args.config:
            try:
                with open(args.config, "r", encoding="utf-8") as handle:
                    self.config_text = handle.read()
            except OSError as exc:
                raise UsageError(f"cannot read config {args.config}: {exc}") from exc
            self.config = load_config(args.config)
        else:
            self.config = RunConfig()
            validate_config(self.config)
            self.config_text = canonical_json_bytes(self.config.as_dict()).decode("utf-8")
        self.out = args.out or self.config.output.directory
        self.outputs: List[str] = []

    def path(self, *parts: str) -> str:
        return os.path.join(self.out, *parts)

    def wrote(self, *paths: str) -> None:
        self.outputs.extend(paths)

    def engine(self) -> SKTCoreEngine:
        return create_skt_engine(self.config)


def _processor_for(branch: Branch, run: _Run) -> ContinuationProcessor:
    settings = run.config.continuation_settings()
    scaling = Scaling(branch.meta.get("scaling", settings.scaling.value))
    return ContinuationProcessor(branch.params, branch.grid, replace(settings, scaling=scaling))


def cmd_trace(run: _Run) -> int:
    args, cc = run.args, run.config.continuation
    window = args.window or tuple(cc.window)
    depth = cc.max_depth if args.max_depth is None else args.max_depth
    engine = run.engine()
    if run.config.mode is ContinuationMode.D:
        branches = engine.run_d_diagram(window, depth)
    else:
        branches = engine.run_lambda_diagram(window, depth, include_trivial=not args.no_trivial)
    for branch in branches:
        run.wrote(*write_branch(branch, run.path("branches")))
        for record in branch.bifurcations:
            name = branch.mode.param_name()
            print(f"{branch.id}: {record.kind.value} at {name}={record.param_at:.6g} "
                  f"(width {record.localization_width:.1e})")
    return 0


def cmd_switch(run: _Run) -> int:
    args = run.args
    branch = read_branch(args.branch)
    if branch.mode is not ContinuationMode.LAMBDA:
        raise PreconditionError("switching works on lambda-mode branches")
    if not 0 <= args.record < len(branch.bifurcations):
        raise UsageError(f"branch {branch.id} has {len(branch.bifurcations)} records")
    processor = _processor_for(branch, run)
    record = branch.bifurcations[args.record]
    start = processor.switch_side(record, sign=1 if args.sign == "+" else -1, base_branch=branch)
    window = args.window or tuple(run.config.continuation.window)
    child = processor.trace_branch(start, window, branch_id=processor.child_label(start),
                                   parent=(branch.id, record.param_at))
    run.wrote(*write_branch(child, run.path("branches")))
    print(f"{child.id}: {len(child.points)} points, {len(child.bifurcations)} records")
    return 0


def cmd_sweep(run: _Run) -> int:
    args, sw = run.args, run.config.sweep
    branch = read_branch(args.branch)
    lam = sw.lam if args.lam is None else args.lam
    alphas = args.alphas or sw.alphas
    selector = BranchSelector(kind=args.kind or sw.kind, j=args.j if args.j is not None else sw.j,
                              sign=args.sign or sw.sign)
    engine = SKTCoreEngine(branch.params, branch.grid, _processor_for(branch, run).settings,
                           run.config.thresholds())
    report = engine.sweep(lam, alphas, branch, selector)
    path = run.path("sweeps", f"sweep_{branch.id}_{lam:g}.json")
    run.wrote(write_sweep_report(report, path))
    print(f"lambda={lam:g}: {report.verdict.value} (rate {report.fitted_rate:.3g})")
    return 0


def cmd_limits(run: _Run) -> int:
    engine = run.engine()
    grid = engine.grid
    for lam in run.args.lams:
        columns = {field.kind.value: field.values for field in engine.limits(lam)}
        path = run.path("limits", f"limits_{lam:g}.csv")
        run.wrote(write_profile(path, grid.x, columns))
        print(f"lambda={lam:g}: {', '.join(columns)}")
    return 0


def cmd_shoot(run: _Run) -> int:
    args = run.args
    grid = run.config.grid()
    if not grid.is_symmetric():
        raise PreconditionError("shooting needs a domain symmetric about 0")
    params = run.config.params(grid)
    if np.ptp(params.m) > 0:
        raise PreconditionError("shooting needs a constant m")
    sol = shoot_LS2(args.lam, args.j, args.sign, ell=0.5 * grid.length, m_const=float(params.m[0]),
                    b1=params.b1, c2=params.c2, grid=grid)
    path = run.path("profiles", f"shoot_j{args.j}{args.sign}_{args.lam:g}.csv")
    run.wrote(write_profile(path, sol.x, {"w": sol.w, "w_plus": np.maximum(sol.w, 0.0),
                                          "w_minus": np.maximum(-sol.w, 0.0)}))
    print(f"slope {sol.slope0:.12g}, zeros {sol.zeros}, endpoint residual {sol.endpoint_residual:.2e}")
    return 0


def cmd_eigs(run: _Run) -> int:
    grid = run.config.grid()
    params = run.config.params(grid)
    pairs = eigen_weighted(grid, params.m, run.args.k)
    columns = {f"phi{p.index}": p.vector for p in pairs}
    run.wrote(write_profile(run.path("eigs", "eigenvectors.csv"), grid.x, columns))
    for pair in pairs:
        print(f"lambda_{pair.index} = {pair.value:.12g}")
    return 0


def cmd_plot(run: _Run) -> int:
    args = run.args
    palette = run.config.output.palette
    if args.diagram:
        branches = read_branches(args.diagram)
        path = args.output or run.path("plots", "diagram.svg")
        run.wrote(emit_svg("diagram", branches, path, palette))
    else:
        branch = read_branch(args.profile)
        if args.param is None:
            point = branch.points[-1]
        elif branch.mode is ContinuationMode.LAMBDA:
            point = _processor_for(branch, run).point_at(branch, args.param)
        else:
            point = min(branch.points, key=lambda p: abs(p.param - args.param))
        path = args.output or run.path("plots", f"profile_{branch.id}_{point.param:.6g}.svg")
        run.wrote(emit_svg("profile", (point, branch.grid), path, palette))
    print(run.outputs[-1])
    return 0


def _roundoff_floor(branch: Branch, x: np.ndarray) -> float:
    """細かい格子では丸め誤差だけで 1e-9 を超える"""
    h = branch.grid.h
    return 64.0 * np.finfo(float).eps * (4.0 / h ** 2) * max(1.0, float(np.max(np.abs(x), initial=0.0)))


def verify_branch(branch: Branch, tol: float = VERIFY_TOL) -> List[str]:
    """保存済みの各点で残差と L2 評価を再確認する"""
    problems = []
    for k, point in enumerate(branch.points):
        if branch.mode is ContinuationMode.LAMBDA:
            params = branch.params.with_lambda(point.param)
            res = float(np.max(np.abs(residual_wz(params, point.state, branch.grid))))
            if res > max(tol, _roundoff_floor(branch, point.state.to_vector())):
                problems.append(f"{branch.id}[{k}] residual {res:.3e}")
            for violation in check_apriori(params, point.uv, branch.grid):
                problems.append(f"{branch.id}[{k}] {violation}")
        else:
            res, floor = d_mode_residual(branch.params, point.param, point.uv, branch.grid)
            if res > max(tol, floor):
                problems.append(f"{branch.id}[{k}] d-residual {res:.3e}")
    return problems


def cmd_verify(run: _Run) -> int:
    branches = read_branches(run.args.dir)
    problems = []
    for branch in branches:
        problems.extend(verify_branch(branch))
    for line in problems:
        print(line)
    print(f"{len(branches)} branches, {sum(len(b) for b in branches)} points, {len(problems)} problems")
    return 1 if problems else 0


COMMANDS: Dict[str, Callable[[_Run], int]] = {
    "trace": cmd_trace,
    "switch": cmd_switch,
    "sweep": cmd_sweep,
    "limits": cmd_limits,
    "shoot": cmd_shoot,
    "eigs": cmd_eigs,
    "plot": cmd_plot,
    "verify": cmd_verify,
}


def cli_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """サブコマンドを実行して終了コードを返す"""
    argv = list(sys.argv[1:] if argv is None else argv)
    started = utc_now()
    run = None
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError(f"a subcommand is required: {', '.join(SUBCOMMANDS)}")
        if args.verbose:
            set_level("DEBUG" if args.verbose > 1 else "INFO")
        run = _Run(args)
        code = COMMANDS[args.command](run)
        status = "ok" if code == 0 else "failed"
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SKTError as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        code, status = 1, f"failed: {type(exc).__name__}"
    if run is not None:
        write_manifest(run.out, run.config_text, run.args.command, argv, VERSION, started,
                       outputs=run.outputs, status=status)
    return code


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
