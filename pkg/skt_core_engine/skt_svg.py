"""
SKT SVG Plots
SKT 連続体解析 - 分岐図とプロファイルの SVG 出力

外部資産なしの自己完結 SVG。数値は固定桁で書き、同じ入力なら同じバイト列になる。
"""

import math
import os
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

try:
    from .skt_types import Branch, BranchPoint, Grid
    from .skt_errors import EmptyData, PreconditionError
    from .skt_territory import analyze_territory
except ImportError:
    import sys
    sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
    from skt_types import Branch, BranchPoint, Grid
    from skt_errors import EmptyData, PreconditionError
    from skt_territory import analyze_territory

NS_SVG = "http://www.w3.org/2000/svg"
DEFAULT_PALETTE = ["#1f4fd1", "#d1261f", "#7b2fbe", "#2a9d3c"]   # blue, red, purple, green
WIDTH, HEIGHT = 640, 420
MARGIN = (64, 24, 24, 48)   # left, right, top, bottom


def _num(x: float) -> str:
    """座標は小数 2 桁固定"""
    value = round(float(x), 2)
    return "0" if value == 0 else f"{value:.2f}".rstrip("0").rstrip(".")


def _props(attrs: Dict[str, Any]) -> str:
    parts = []
    for key, value in attrs.items():
        text = _num(value) if isinstance(value, float) else str(value)
        parts.append(f'{key.replace("_", "-")}="{text}"')
    return " ".join(parts)


def _element(tag: str, text: Optional[str] = None, **attrs) -> str:
    if text is None:
        return f"<{tag} {_props(attrs)}/>"
    return f"<{tag} {_props(attrs)}>{_escape(text)}</{tag}>"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _nice_ticks(lo: float, hi: float, count: int = 5) -> List[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    step = 10.0 ** math.floor(math.log10(raw))
    for factor in (1.0, 2.0, 5.0, 10.0):
        if raw <= factor * step:
            step *= factor
            break
    first = math.ceil(lo / step) * step
    ticks = []
    value = first
    while value <= hi + 1e-9 * step:
        ticks.append(round(value, 12))
        value += step
    return ticks


class _Frame:
    """データ座標 -> ピクセル座標"""

    def __init__(self, xlim: Tuple[float, float], ylim: Tuple[float, float]):
        self.xlim = xlim if xlim[1] > xlim[0] else (xlim[0] - 1.0, xlim[0] + 1.0)
        self.ylim = ylim if ylim[1] > ylim[0] else (ylim[0] - 1.0, ylim[0] + 1.0)
        left, right, top, bottom = MARGIN
        self.box = (left, top, WIDTH - right, HEIGHT - bottom)

    def x(self, value: float) -> float:
        x0, x1 = self.xlim
        return self.box[0] + (value - x0) / (x1 - x0) * (self.box[2] - self.box[0])

    def y(self, value: float) -> float:
        y0, y1 = self.ylim
        return self.box[3] - (value - y0) / (y1 - y0) * (self.box[3] - self.box[1])

    def polyline(self, xs: Sequence[float], ys: Sequence[float], color: str, width: float = 1.5) -> str:
        points = " ".join(f"{_num(self.x(a))},{_num(self.y(b))}" for a, b in zip(xs, ys))
        return _element("polyline", points=points, fill="none", stroke=color, stroke_width=width)

    def axes(self, xlabel: str, ylabel: str) -> List[str]:
        x0, y0, x1, y1 = self.box
        out = [_element("rect", x=float(x0), y=float(y0), width=float(x1 - x0), height=float(y1 - y0),
                        fill="none", stroke="#000000", stroke_width=1.0)]
        for tick in _nice_ticks(*self.xlim):
            px = self.x(tick)
            out.append(_element("line", x1=px, y1=float(y1), x2=px, y2=float(y1 + 5), stroke="#000000"))
            out.append(_element("text", f"{tick:g}", x=px, y=float(y1 + 18), text_anchor="middle",
                                font_size=11))
        for tick in _nice_ticks(*self.ylim):
            py = self.y(tick)
            out.append(_element("line", x1=float(x0 - 5), y1=py, x2=float(x0), y2=py, stroke="#000000"))
            out.append(_element("text", f"{tick:g}", x=float(x0 - 8), y=py + 4.0, text_anchor="end",
                                font_size=11))
        out.append(_element("text", xlabel, x=(x0 + x1) / 2.0, y=float(HEIGHT - 8), text_anchor="middle",
                            font_size=13))
        out.append(_element("text", ylabel, x=14.0, y=(y0 + y1) / 2.0, text_anchor="middle",
                            font_size=13,
                            transform=f"rotate(-90 14 {_num((y0 + y1) / 2.0)})"))
        return out


def _document(body: List[str], title: str) -> str:
    header = (f'<svg xmlns="{NS_SVG}" width="{WIDTH}" height="{HEIGHT}" '
              f'viewBox="0 0 {WIDTH} {HEIGHT}">')
    lines = [header, _element("title", title),
             _element("rect", x=0.0, y=0.0, width=float(WIDTH), height=float(HEIGHT), fill="#ffffff")]
    lines += body
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _limits(values: List[np.ndarray], pad: float = 0.05) -> Tuple[float, float]:
    finite = np.concatenate([v[np.isfinite(v)] for v in values]) if values else np.zeros(0)
    if finite.size == 0:
        return 0.0, 1.0
    lo, hi = float(finite.min()), float(finite.max())
    span = hi - lo if hi > lo else max(abs(hi), 1.0)
    return lo - pad * span, hi + pad * span


def diagram_svg(branches: Sequence[Branch], palette: Optional[Sequence[str]] = None,
                norm: int = 0, title: str = "bifurcation diagram") -> str:
    """横軸パラメータ、縦軸 |u|_2（norm で (|u|_2, |v|_2, |u|_inf, |v|_inf) を選ぶ）"""
    branches = [b for b in branches if len(b.points) > 0]
    if not branches:
        raise EmptyData("no branch points to draw")
    palette = list(palette or DEFAULT_PALETTE)
    series = [(b.params_array(), np.array([p.norms[norm] for p in b.points])) for b in branches]
    frame = _Frame(_limits([s[0] for s in series], 0.0), _limits([s[1] for s in series]))
    mode = branches[0].mode.param_name()
    ylabel = ["|u|_2", "|v|_2", "|u|_inf", "|v|_inf"][norm]
    body = frame.axes("lambda" if mode == "lambda" else "d", ylabel)
    for k, (branch, (xs, ys)) in enumerate(zip(branches, series)):
        color = branch.meta.get("color") or palette[k % len(palette)]
        body.append(f"<g id=\"branch-{_escape(branch.id)}\">")
        body.append(frame.polyline(xs, ys, color))
        for record in branch.bifurcations:
            body.append(_element("circle", cx=frame.x(record.param_at),
                                 cy=frame.y(record.point.norms[norm]),
                                 r=3.5, fill="#ffffff", stroke=color, stroke_width=1.5))
        body.append("</g>")
        body.append(_element("text", branch.id, x=float(WIDTH - MARGIN[1] - 8),
                             y=float(MARGIN[2] + 16 + 14 * k), text_anchor="end", font_size=11,
                             fill=color))
    return _document(body, title)


def profile_svg(x: np.ndarray, columns: Dict[str, np.ndarray], palette: Optional[Sequence[str]] = None,
                title: str = "profile", legend: Optional[str] = None) -> str:
    """x に対する u, v などの曲線"""
    x = np.asarray(x, dtype=float)
    if x.size == 0 or not columns:
        raise EmptyData("no profile values to draw")
    palette = list(palette or DEFAULT_PALETTE)
    values = [np.asarray(v, dtype=float) for v in columns.values()]
    frame = _Frame((float(x.min()), float(x.max())), _limits(values))
    body = frame.axes("x", "value")
    for k, (name, ys) in enumerate(zip(columns, values)):
        color = palette[k % len(palette)]
        body.append(frame.polyline(x, ys, color))
        body.append(_element("text", name, x=float(WIDTH - MARGIN[1] - 8),
                             y=float(MARGIN[2] + 16 + 14 * k),
                             text_anchor="end", font_size=11, fill=color))
    if legend:
        body.append(_element("text", legend, x=float(MARGIN[0] + 8), y=float(MARGIN[2] + 16),
                             font_size=11))
    return _document(body, title)


def point_profile_svg(point: BranchPoint, grid: Grid, palette: Optional[Sequence[str]] = None) -> str:
    """BranchPoint の u, v。凡例にすみ分けパターンを添える"""
    info = analyze_territory(point.uv, grid)
    legend = f"pattern {info.pattern}  overlap {info.overlap:.3g}"
    return profile_svg(grid.x, {"u": point.uv.u, "v": point.uv.v}, palette,
                       title=f"profile at {point.param:.6g}", legend=legend)


def emit_svg(kind: str, data: Any, path: str, palette: Optional[Sequence[str]] = None) -> str:
    """kind = 'diagram'（Branch の列）または 'profile'（(point, grid) か {'x':..., 列...}）"""
    if kind == "diagram":
        text = diagram_svg(list(data), palette)
    elif kind == "profile":
        if isinstance(data, tuple) and len(data) == 2 and isinstance(data[0], BranchPoint):
            text = point_profile_svg(data[0], data[1], palette)
        elif isinstance(data, dict) and "x" in data:
            columns = {k: v for k, v in data.items() if k not in ("x", "title")}
            text = profile_svg(data["x"], columns, palette, title=str(data.get("title", "profile")))
        else:
            raise EmptyData("profile data must be (BranchPoint, Grid) or a column mapping with 'x'")
    else:
        raise PreconditionError(f"unknown plot kind {kind!r}")
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
    return path
