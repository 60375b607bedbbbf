"""Deterministic SVG line chart of metric-vs-training-set-size curves."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

from poolal import metrics

WIDTH, HEIGHT = 720, 440
LEFT, RIGHT, TOP, BOTTOM = 70, 230, 20, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
N_TICKS = 5


def format_number(value: float) -> str:
    """Shortest round-trip decimal, shared by the legend and the summary table."""
    return repr(float(value))


@dataclass
class PlotSpec:
    series: dict[str, list[float]]
    init_size: int
    metric: str = "rmse"

    def __post_init__(self):
        if not self.series:
            raise ValueError("nothing to plot")
        lengths = {len(v) for v in self.series.values()}
        if len(lengths) != 1 or 0 in lengths:
            raise ValueError("all series must be nonempty and of equal length")

    @property
    def length(self) -> int:
        return len(next(iter(self.series.values())))

    def legend_label(self, method: str) -> str:
        return f"{method.upper()} (AUC={format_number(metrics.auc(self.series[method]))})"


def _ticks(lo, hi):
    if hi == lo:
        return [lo]
    step = (hi - lo) / (N_TICKS - 1)
    return [lo + k * step for k in range(N_TICKS)]


def render_svg(spec: PlotSpec) -> str:
    values = [v for s in spec.series.values() for v in s]
    y_lo, y_hi = min(values), max(values)
    if y_hi == y_lo:
        pad = abs(y_lo) * 0.1 or 1.0
        y_lo, y_hi = y_lo - pad, y_hi + pad
    x_lo = spec.init_size
    x_hi = spec.init_size + spec.length - 1
    plot_w = WIDTH - LEFT - RIGHT
    plot_h = HEIGHT - TOP - BOTTOM

    def sx(x):
        if x_hi == x_lo:
            return LEFT + plot_w / 2
        return LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y):
        return TOP + (y_hi - y) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>',
    ]
    x_ticks = sorted({round(t) for t in _ticks(x_lo, x_hi)})
    for t in x_ticks:
        x = sx(t)
        out.append(f'<line x1="{x:.2f}" y1="{TOP + plot_h}" x2="{x:.2f}" y2="{TOP + plot_h + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{TOP + plot_h + 18}" text-anchor="middle">{t}</text>')
    for t in _ticks(y_lo, y_hi):
        y = sy(t)
        out.append(f'<line x1="{LEFT - 5}" y1="{y:.2f}" x2="{LEFT}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y + 4:.2f}" text-anchor="end">{t:.4g}</text>')
    out.append(f'<text x="{LEFT + plot_w / 2:.2f}" y="{HEIGHT - 10}" text-anchor="middle">'
               'number of training samples</text>')
    out.append(f'<text x="15" y="{TOP + plot_h / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 15 {TOP + plot_h / 2:.2f})">{escape(spec.metric.upper())}</text>')

    for k, (method, series) in enumerate(spec.series.items()):
        color = COLORS[k % len(COLORS)]
        points = [(sx(spec.init_size + i), sy(v)) for i, v in enumerate(series)]
        if len(points) > 1:
            coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        else:
            x, y = points[0]
            out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="{color}"/>')
        ly = TOP + 10 + 18 * k
        lx = WIDTH - RIGHT + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">{escape(spec.legend_label(method))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(spec: PlotSpec, path) -> None:
    Path(path).write_text(render_svg(spec), encoding="utf-8", newline="\n")
