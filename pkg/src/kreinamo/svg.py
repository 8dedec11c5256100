"""Minimal self-contained SVG line plots.

Plots are diagnostics; CSV is the artifact of record.  No external assets,
no plotting dependency: every figure is one <svg> element with axes, tick
labels, and one polyline per series.
"""

from __future__ import annotations

import math
from pathlib import Path

_PALETTE = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
]


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo == hi:
        return [lo]
    span = hi - lo
    raw = span / max(1, target)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * mag
        if span / step <= target:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * span:
        ticks.append(0.0 if abs(t) < 1e-12 * span else t)
        t += step
    return ticks


def _fmt(x: float) -> str:
    if x == 0:
        return "0"
    if abs(x) >= 1e4 or abs(x) < 1e-3:
        return f"{x:.2e}"
    return f"{x:.6g}"


class LinePlot:
    """Accumulates (x, y) series and writes one standalone SVG file."""

    def __init__(self, title: str = "", xlabel: str = "", ylabel: str = "",
                 width: int = 720, height: int = 480):
        self.title = title
        self.xlabel = xlabel
        self.ylabel = ylabel
        self.width = width
        self.height = height
        self.series: list[tuple] = []

    def add(self, x, y, label: str = "", color: str | None = None,
            stroke_width: float = 1.4) -> None:
        xs = [float(v) for v in x]
        ys = [float(v) for v in y]
        if len(xs) != len(ys):
            raise ValueError("x and y lengths differ")
        if color is None:
            color = _PALETTE[len(self.series) % len(_PALETTE)]
        self.series.append((xs, ys, label, color, stroke_width))

    def render(self) -> str:
        ml, mr, mt, mb = 64, 16, 30, 46
        pw = self.width - ml - mr
        ph = self.height - mt - mb
        xs_all = [v for s in self.series for v in s[0] if math.isfinite(v)]
        ys_all = [v for s in self.series for v in s[1] if math.isfinite(v)]
        if not xs_all:
            xs_all, ys_all = [0.0, 1.0], [0.0, 1.0]
        x_lo, x_hi = min(xs_all), max(xs_all)
        y_lo, y_hi = min(ys_all), max(ys_all)
        if x_lo == x_hi:
            x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
        if y_lo == y_hi:
            y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
        pad = 0.04 * (y_hi - y_lo)
        y_lo, y_hi = y_lo - pad, y_hi + pad

        def px(x):
            return ml + pw * (x - x_lo) / (x_hi - x_lo)

        def py(y):
            return mt + ph * (1.0 - (y - y_lo) / (y_hi - y_lo))

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">',
            f'<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="white"/>',
            f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" '
            'stroke="#333" stroke-width="1"/>',
        ]
        if self.title:
            parts.append(
                f'<text x="{self.width / 2}" y="{mt - 10}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="14">{self.title}</text>'
            )
        for t in _nice_ticks(x_lo, x_hi):
            X = px(t)
            parts.append(f'<line x1="{X:.2f}" y1="{mt + ph}" x2="{X:.2f}" '
                         f'y2="{mt + ph + 5}" stroke="#333"/>')
            parts.append(f'<text x="{X:.2f}" y="{mt + ph + 18}" text-anchor="middle" '
                         f'font-family="sans-serif" font-size="11">{_fmt(t)}</text>')
        for t in _nice_ticks(y_lo, y_hi):
            Y = py(t)
            parts.append(f'<line x1="{ml - 5}" y1="{Y:.2f}" x2="{ml}" y2="{Y:.2f}" stroke="#333"/>')
            parts.append(f'<text x="{ml - 8}" y="{Y + 4:.2f}" text-anchor="end" '
                         f'font-family="sans-serif" font-size="11">{_fmt(t)}</text>')
        if self.xlabel:
            parts.append(f'<text x="{ml + pw / 2}" y="{self.height - 8}" text-anchor="middle" '
                         f'font-family="sans-serif" font-size="12">{self.xlabel}</text>')
        if self.ylabel:
            parts.append(f'<text x="16" y="{mt + ph / 2}" text-anchor="middle" '
                         f'font-family="sans-serif" font-size="12" '
                         f'transform="rotate(-90 16 {mt + ph / 2})">{self.ylabel}</text>')
        legend_y = mt + 14
        for xs, ys, label, color, sw in self.series:
            pts = " ".join(
                f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys)
                if math.isfinite(x) and math.isfinite(y)
            )
            if pts:
                parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                             f'stroke-width="{sw}"/>')
            if label:
                parts.append(f'<line x1="{ml + pw - 110}" y1="{legend_y}" x2="{ml + pw - 90}" '
                             f'y2="{legend_y}" stroke="{color}" stroke-width="2"/>')
                parts.append(f'<text x="{ml + pw - 84}" y="{legend_y + 4}" '
                             f'font-family="sans-serif" font-size="11">{label}</text>')
                legend_y += 16
        parts.append("</svg>")
        return "\n".join(parts)

    def write(self, path) -> None:
        Path(path).write_text(self.render() + "\n")
