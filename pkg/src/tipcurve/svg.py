"""Self-contained, byte-deterministic SVG line charts.

Figures are emitted as native SVG polylines (no plotting library) so the
artifact stays dependency-free and two runs of the same config produce
byte-identical files.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence, Tuple

import numpy as np

__all__ = ["emit_svg"]

WIDTH = 800
HEIGHT = 500
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 62, 18, 34, 44

PALETTE = [
    "#c0392b",  # red
    "#2456a4",  # blue
    "#1e8449",  # green
    "#8e44ad",  # purple
    "#b9770e",  # ochre
    "#148f9c",  # teal
]


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _nice_ticks(lo: float, hi: float, target: int = 6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(target, 2)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mult * mag
        if raw <= step:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + step * 1e-9:
        ticks.append(0.0 if abs(v) < step * 1e-9 else v)
        v += step
    return ticks


def emit_svg(
    series: Sequence[Tuple[str, np.ndarray, np.ndarray]],
    title: Optional[str] = None,
    x_label: Optional[str] = None,
    y_label: Optional[str] = None,
) -> str:
    """Render named (x, y) polylines into a standalone SVG 1.1 document.

    All values must be finite (truncate escaping tails at the blow-up
    threshold before calling); NaN samples split a series into segments.
    """
    if not series:
        raise ValueError("emit_svg needs at least one series")

    xs_all, ys_all = [], []
    cleaned = []
    for name, xv, yv in series:
        xv = np.asarray(xv, dtype=float)
        yv = np.asarray(yv, dtype=float)
        if xv.shape != yv.shape or xv.size == 0:
            raise ValueError(f"series {name!r} is empty or mismatched")
        if np.any(np.isinf(xv)) or np.any(np.isinf(yv)):
            raise ValueError(f"series {name!r} contains infinities")
        cleaned.append((name, xv, yv))
        mask = np.isfinite(yv)
        if np.any(mask):
            xs_all.append(xv[mask])
            ys_all.append(yv[mask])
    if not xs_all:
        raise ValueError("no finite samples to plot")

    x_lo = float(min(a.min() for a in xs_all))
    x_hi = float(max(a.max() for a in xs_all))
    y_lo = float(min(a.min() for a in ys_all))
    y_hi = float(max(a.max() for a in ys_all))
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad = 0.04 * (y_hi - y_lo)
    y_lo -= pad
    y_hi += pad

    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def px(x):
        return MARGIN_L + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return MARGIN_T + (y_hi - y) / (y_hi - y_lo) * ph

    out = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">'
    )
    out.append(f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>')

    # axes + ticks
    out.append(
        f'<g stroke="#888888" stroke-width="1" fill="none">'
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}"/></g>'
    )
    tick_lines = []
    tick_text = []
    for tx in _nice_ticks(x_lo, x_hi):
        X = px(tx)
        tick_lines.append(f'<line x1="{_fmt(X)}" y1="{MARGIN_T + ph}" x2="{_fmt(X)}" y2="{MARGIN_T + ph + 5}"/>')
        tick_text.append(
            f'<text x="{_fmt(X)}" y="{MARGIN_T + ph + 18}" text-anchor="middle">{_fmt(tx)}</text>'
        )
    for ty in _nice_ticks(y_lo, y_hi):
        Y = py(ty)
        tick_lines.append(f'<line x1="{MARGIN_L - 5}" y1="{_fmt(Y)}" x2="{MARGIN_L}" y2="{_fmt(Y)}"/>')
        tick_text.append(
            f'<text x="{MARGIN_L - 8}" y="{_fmt(Y + 4)}" text-anchor="end">{_fmt(ty)}</text>'
        )
    out.append(f'<g stroke="#444444" stroke-width="1">{"".join(tick_lines)}</g>')
    out.append(
        f'<g font-family="monospace" font-size="12" fill="#222222">{"".join(tick_text)}</g>'
    )

    if title:
        out.append(
            f'<text x="{WIDTH // 2}" y="20" text-anchor="middle" '
            f'font-family="monospace" font-size="14" fill="#000000">{_esc(title)}</text>'
        )
    if x_label:
        out.append(
            f'<text x="{WIDTH // 2}" y="{HEIGHT - 8}" text-anchor="middle" '
            f'font-family="monospace" font-size="12" fill="#000000">{_esc(x_label)}</text>'
        )
    if y_label:
        out.append(
            f'<text x="16" y="{HEIGHT // 2}" text-anchor="middle" '
            f'font-family="monospace" font-size="12" fill="#000000" '
            f'transform="rotate(-90 16 {HEIGHT // 2})">{_esc(y_label)}</text>'
        )

    for i, (name, xv, yv) in enumerate(cleaned):
        color = PALETTE[i % len(PALETTE)]
        # split on NaN gaps
        mask = np.isfinite(yv)
        start = 0
        segs = []
        for j in range(len(xv) + 1):
            if j == len(xv) or not mask[j]:
                if j - start >= 2:
                    pts = " ".join(
                        f"{_fmt(px(xv[k]))},{_fmt(py(yv[k]))}" for k in range(start, j)
                    )
                    segs.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
                start = j + 1
        out.extend(segs)

    # legend
    for i, (name, _, _) in enumerate(cleaned):
        color = PALETTE[i % len(PALETTE)]
        y0 = MARGIN_T + 14 + 16 * i
        x0 = WIDTH - MARGIN_R - 150
        out.append(f'<line x1="{x0}" y1="{y0 - 4}" x2="{x0 + 22}" y2="{y0 - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(
            f'<text x="{x0 + 28}" y="{y0}" font-family="monospace" font-size="12" '
            f'fill="#000000">{_esc(name)}</text>'
        )

    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )
