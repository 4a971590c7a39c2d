"""Static SVG line plots written by hand, byte-stable for identical input."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

from ..errors import UsageError

__all__ = ["AxesSpec", "emit_plot"]

_W, _H = 640, 440
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 150, 40, 60
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


@dataclass(frozen=True)
class AxesSpec:
    x: str
    y: str
    group: Optional[str] = None
    log_x: bool = False
    log_y: bool = False
    title: str = ""
    # horizontal reference lines as (value, label)
    hlines: Tuple[Tuple[float, str], ...] = field(default_factory=tuple)


def _num(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:.4g}"


def _series(rows: Sequence[Mapping], axes: AxesSpec) -> Dict[str, List[Tuple[float, float]]]:
    out: Dict[str, List[Tuple[float, float]]] = {}
    for row in rows:
        try:
            x, y = float(row[axes.x]), float(row[axes.y])
        except (TypeError, ValueError):
            continue
        if not (math.isfinite(x) and math.isfinite(y)):
            continue
        if (axes.log_x and x <= 0) or (axes.log_y and y <= 0):
            continue
        key = str(row[axes.group]) if axes.group else axes.y
        out.setdefault(key, []).append((x, y))
    return {k: sorted(v) for k, v in sorted(out.items())}


def _ticks(lo: float, hi: float, log: bool) -> List[float]:
    if log:
        a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        return [10.0**e for e in range(a, b + 1) if lo <= 10.0**e <= hi] or [lo, hi]
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / 5)) if span > 0 else 1.0
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= 6:
            step *= mult
            break
    start = math.ceil(lo / step) * step
    ticks, t = [], start
    while t <= hi + 1e-12 * max(1.0, abs(hi)):
        ticks.append(round(t, 12))
        t += step
    return ticks


def emit_plot(rows: Sequence[Mapping], axes: AxesSpec) -> str:
    """Render ``rows`` as an SVG document with one polyline per group.

    Raises :class:`UsageError` when a named column is absent from a
    non-empty table.
    """
    if rows:
        cols = set(rows[0].keys())
        for col in (axes.x, axes.y) + ((axes.group,) if axes.group else ()):
            if col not in cols:
                raise UsageError(f"unknown column {col!r}; available: {sorted(cols)}")
    series = _series(rows, axes)

    xs = [p[0] for pts in series.values() for p in pts]
    ys = [p[1] for pts in series.values() for p in pts] + [v for v, _ in axes.hlines]
    if not xs:
        xs = [1.0, 10.0] if axes.log_x else [0.0, 1.0]
    if not ys:
        ys = [1.0, 10.0] if axes.log_y else [0.0, 1.0]

    def bounds(vals, log):
        lo, hi = min(vals), max(vals)
        if log:
            lo, hi = math.log10(lo), math.log10(hi)
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        pad = 0.05 * (hi - lo)
        return lo - pad, hi + pad

    x0, x1 = bounds(xs, axes.log_x)
    y0, y1 = bounds(ys, axes.log_y)
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM

    def px(x):
        v = math.log10(x) if axes.log_x else x
        return _LEFT + (v - x0) / (x1 - x0) * pw

    def py(y):
        v = math.log10(y) if axes.log_y else y
        return _TOP + ph - (v - y0) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_LEFT}" y="{_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if axes.title:
        out.append(f'<text x="{_W / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(axes.title)}</text>')
    xlo = 10**x0 if axes.log_x else x0
    xhi = 10**x1 if axes.log_x else x1
    ylo = 10**y0 if axes.log_y else y0
    yhi = 10**y1 if axes.log_y else y1
    for t in _ticks(xlo, xhi, axes.log_x):
        x = px(t)
        out.append(f'<line x1="{_num(x)}" y1="{_TOP + ph}" x2="{_num(x)}" y2="{_TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_num(x)}" y="{_TOP + ph + 18}" text-anchor="middle">{_tick_label(t)}</text>')
    for t in _ticks(ylo, yhi, axes.log_y):
        y = py(t)
        out.append(f'<line x1="{_LEFT - 5}" y1="{_num(y)}" x2="{_LEFT}" y2="{_num(y)}" stroke="black"/>')
        out.append(f'<text x="{_LEFT - 8}" y="{_num(y + 4)}" text-anchor="end">{_tick_label(t)}</text>')
    xlabel = escape(axes.x + (" (log)" if axes.log_x else ""))
    ylabel = escape(axes.y + (" (log)" if axes.log_y else ""))
    out.append(f'<text x="{_LEFT + pw / 2:.1f}" y="{_H - 15}" text-anchor="middle">{xlabel}</text>')
    out.append(
        f'<text x="18" y="{_TOP + ph / 2:.1f}" text-anchor="middle" transform="rotate(-90 18 {_TOP + ph / 2:.1f})">{ylabel}</text>'
    )
    for value, label in axes.hlines:
        y = py(value)
        out.append(
            f'<line x1="{_LEFT}" y1="{_num(y)}" x2="{_LEFT + pw}" y2="{_num(y)}" stroke="gray" stroke-dasharray="6 4"/>'
        )
        out.append(f'<text x="{_LEFT + pw - 4}" y="{_num(y - 4)}" text-anchor="end" fill="gray">{escape(label)}</text>')
    for i, (key, pts) in enumerate(series.items()):
        color = _PALETTE[i % len(_PALETTE)]
        path = " ".join(f"{_num(px(x))},{_num(py(y))}" for x, y in pts)
        out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in pts:
            out.append(f'<circle cx="{_num(px(x))}" cy="{_num(py(y))}" r="3" fill="{color}"/>')
        ly = _TOP + 14 + 18 * i
        out.append(f'<line x1="{_W - _RIGHT + 12}" y1="{ly - 4}" x2="{_W - _RIGHT + 32}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_W - _RIGHT + 38}" y="{ly}">{escape(key)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
