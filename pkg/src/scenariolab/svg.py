"""Minimal SVG line and bar charts for sweep curves and importance plots."""
from __future__ import annotations

import math
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
           "#7f7f7f", "#bcbd22", "#17becf")

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=70, right=150, top=40, bottom=70)


class _Canvas:
    def __init__(self, width=WIDTH, height=HEIGHT):
        self.width, self.height = width, height
        self.parts: list[str] = []

    def add(self, element: str):
        self.parts.append(element)

    def text(self, x, y, s, anchor="middle", size=12, rotate=None, weight="normal"):
        transform = f' transform="rotate({rotate} {x:.1f} {y:.1f})"' if rotate else ""
        self.add(f'<text x="{x:.1f}" y="{y:.1f}" font-size="{size}" text-anchor="{anchor}" '
                 f'font-weight="{weight}"{transform}>{escape(str(s))}</text>')

    def line(self, x1, y1, x2, y2, stroke="#000", width=1.0):
        self.add(f'<line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" y2="{y2:.1f}" '
                 f'stroke="{stroke}" stroke-width="{width}"/>')

    def render(self) -> str:
        body = "\n".join(self.parts)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
                f'viewBox="0 0 {self.width} {self.height}" font-family="sans-serif">\n'
                f'<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n')


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.floor(lo / step) * step
    n_steps = math.ceil((hi - start) / step - 1e-9)
    return [round(start + i * step, 10) for i in range(n_steps + 1)]


def _fmt_tick(v: float) -> str:
    if v != 0 and (abs(v) < 1e-3 or abs(v) >= 1e4):
        return f"{v:.0e}"
    return f"{v:g}"


def line_plot(series: Mapping[str, tuple[Sequence[float], Sequence[float]]], title: str = "",
              xlabel: str = "", ylabel: str = "", log_x: bool = False) -> str:
    """One polyline with markers per named series of (x values, y values)."""
    c = _Canvas()
    left, top = MARGIN["left"], MARGIN["top"]
    pw = c.width - left - MARGIN["right"]
    ph = c.height - top - MARGIN["bottom"]
    fx = (lambda v: math.log10(v)) if log_x else (lambda v: float(v))

    xs = [fx(x) for xv, _ in series.values() for x in xv]
    ys = [float(y) for _, yv in series.values() for y in yv]
    xlo, xhi = (min(xs), max(xs)) if xs else (0.0, 1.0)
    if xhi == xlo:
        xlo, xhi = xlo - 1, xhi + 1
    yticks = _nice_ticks(min(0.0, min(ys, default=0.0)), max(ys, default=1.0))
    ylo, yhi = yticks[0], yticks[-1]

    def px(x):
        return left + (fx(x) - xlo) / (xhi - xlo) * pw

    def py(y):
        return top + ph - (y - ylo) / (yhi - ylo) * ph

    c.line(left, top + ph, left + pw, top + ph)
    c.line(left, top, left, top + ph)
    for t in yticks:
        c.line(left - 4, py(t), left, py(t))
        c.text(left - 8, py(t) + 4, _fmt_tick(t), anchor="end", size=10)
    xticks = sorted({x for xv, _ in series.values() for x in xv})
    if len(xticks) > 15:
        xticks = xticks[:: math.ceil(len(xticks) / 15)]
    for t in xticks:
        c.line(px(t), top + ph, px(t), top + ph + 4)
        c.text(px(t), top + ph + 16, _fmt_tick(t), size=10)

    for k, (name, (xv, yv)) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in zip(xv, yv))
        if len(xv) > 1:
            c.add(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in zip(xv, yv):
            c.add(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="3" fill="{color}"/>')
        ly = top + 14 + 18 * k
        c.line(left + pw + 12, ly - 4, left + pw + 32, ly - 4, stroke=color, width=2)
        c.text(left + pw + 38, ly, name, anchor="start", size=11)

    c.text(c.width / 2, 22, title, size=14, weight="bold")
    c.text(left + pw / 2, c.height - 20, xlabel)
    c.text(18, top + ph / 2, ylabel, rotate=-90)
    return c.render()


def bar_chart(labels: Sequence[str], groups: Mapping[str, Sequence[float]], title: str = "",
              ylabel: str = "") -> str:
    """Vertical bars, one cluster per label and one colored bar per group."""
    c = _Canvas(width=max(WIDTH, 60 + 42 * len(labels) + MARGIN["right"]))
    left, top = MARGIN["left"], MARGIN["top"]
    pw = c.width - left - MARGIN["right"]
    ph = c.height - top - MARGIN["bottom"] - 30
    values = [float(v) for vals in groups.values() for v in vals]
    yticks = _nice_ticks(0.0, max(values, default=1.0) or 1.0)
    yhi = yticks[-1]

    def py(y):
        return top + ph - y / yhi * ph

    c.line(left, top + ph, left + pw, top + ph)
    c.line(left, top, left, top + ph)
    for t in yticks:
        c.line(left - 4, py(t), left, py(t))
        c.text(left - 8, py(t) + 4, _fmt_tick(t), anchor="end", size=10)

    slot = pw / max(len(labels), 1)
    bar = 0.8 * slot / max(len(groups), 1)
    for j, label in enumerate(labels):
        x0 = left + j * slot + 0.1 * slot
        for k, vals in enumerate(groups.values()):
            v = float(vals[j])
            color = PALETTE[k % len(PALETTE)]
            c.add(f'<rect x="{x0 + k * bar:.1f}" y="{py(v):.1f}" width="{bar:.1f}" '
                  f'height="{top + ph - py(v):.1f}" fill="{color}"/>')
        cx = left + (j + 0.5) * slot
        c.text(cx, top + ph + 12, label, anchor="end", size=10, rotate=-45)
    if len(groups) > 1:
        for k, name in enumerate(groups):
            ly = top + 14 + 18 * k
            c.add(f'<rect x="{left + pw + 12}" y="{ly - 10}" width="14" height="10" '
                  f'fill="{PALETTE[k % len(PALETTE)]}"/>')
            c.text(left + pw + 32, ly, name, anchor="start", size=11)
    c.text(c.width / 2, 22, title, size=14, weight="bold")
    c.text(18, top + ph / 2, ylabel, rotate=-90)
    return c.render()
