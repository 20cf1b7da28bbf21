"""Minimal SVG 1.1 figures: dissimilarity profile and log-log diagnostic."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from .mbfr import SelectionTrace

W, H = 720, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 30, 40, 90


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _frame(title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{W / 2}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="15">{escape(title)}</text>',
        f'<line x1="{LEFT}" y1="{H - BOTTOM}" x2="{W - RIGHT}" y2="{H - BOTTOM}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{H - BOTTOM}" stroke="black"/>',
    ]


def _y_axis(lo: float, hi: float, label: str) -> tuple[list[str], callable]:
    span = hi - lo or 1.0
    plot_h = H - TOP - BOTTOM

    def ty(v):
        return H - BOTTOM - (v - lo) / span * plot_h

    parts = []
    for i in range(6):
        v = lo + span * i / 5
        y = ty(v)
        parts.append(f'<line x1="{LEFT - 4}" y1="{_fmt(y)}" x2="{LEFT}" y2="{_fmt(y)}" stroke="black"/>')
        parts.append(f'<text x="{LEFT - 8}" y="{_fmt(y + 4)}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{v:.2f}</text>')
    parts.append(f'<text x="16" y="{(TOP + H - BOTTOM) / 2}" font-family="sans-serif" font-size="12" '
                 f'transform="rotate(-90 16 {(TOP + H - BOTTOM) / 2})" text-anchor="middle">'
                 f'{escape(label)}</text>')
    return parts, ty


def emit_profile_svg(trace: SelectionTrace, path: str | Path, cutoff: int | None = None) -> Path:
    """Dissimilarity after each selection step, with the M_2(Y) reference line.

    ``cutoff`` (number of features) is annotated; it defaults to the
    trace's knee suggestion.
    """
    if not trace.steps:
        raise ValueError("empty trace")
    cutoff = trace.knee() if cutoff is None else cutoff
    diss = trace.diss_profile
    lo = min(0.0, min(diss))
    hi = max(max(diss), trace.target_id) * 1.1 or 1.0
    parts = _frame("Dissimilarity along the forward selection")
    axis, ty = _y_axis(lo, hi, "estimated dissimilarity")
    parts += axis

    n = len(diss)
    plot_w = W - LEFT - RIGHT

    def tx(i):
        return LEFT + (i + 0.5) * plot_w / n

    ref = ty(trace.target_id)
    parts.append(f'<line x1="{LEFT}" y1="{_fmt(ref)}" x2="{W - RIGHT}" y2="{_fmt(ref)}" '
                 f'stroke="black" stroke-dasharray="6,4"/>')
    parts.append(f'<text x="{W - RIGHT - 4}" y="{_fmt(ref - 6)}" text-anchor="end" '
                 f'font-family="sans-serif" font-size="11">M2(Y) = {trace.target_id:.3f}</text>')
    if n > 1:
        pts = " ".join(f"{_fmt(tx(i))},{_fmt(ty(v))}" for i, v in enumerate(diss))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#c0392b" stroke-width="1.5"/>')
    for i, (s, v) in enumerate(zip(trace.steps, diss)):
        x = tx(i)
        parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(ty(v))}" r="4" fill="#c0392b"/>')
        weight = "bold" if i < cutoff else "normal"
        parts.append(f'<text x="{_fmt(x)}" y="{H - BOTTOM + 16}" text-anchor="end" font-family="sans-serif" '
                     f'font-size="11" font-weight="{weight}" '
                     f'transform="rotate(-45 {_fmt(x)} {H - BOTTOM + 16})">{escape(s.feature)}</text>')
    if 1 <= cutoff <= n:
        x = (tx(cutoff - 1) + tx(cutoff)) / 2 if cutoff < n else tx(n - 1) + 10
        parts.append(f'<line x1="{_fmt(x)}" y1="{TOP}" x2="{_fmt(x)}" y2="{H - BOTTOM}" '
                     f'stroke="#2c7fb8" stroke-dasharray="2,3"/>')
        parts.append(f'<text x="{_fmt(x + 4)}" y="{TOP + 12}" font-family="sans-serif" font-size="11" '
                     f'fill="#2c7fb8">cut-off: {cutoff} (heuristic)</text>')
    parts.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path


def emit_loglog_svg(inverse_edges: Sequence[int], log_index: Sequence[float],
                    path: str | Path, window: tuple[int, int] | None = None) -> Path:
    """log I_2 against log k, with the selected window shaded."""
    pts = [(math.log(k), v) for k, v in zip(inverse_edges, log_index) if math.isfinite(v)]
    if not pts:
        raise ValueError("no finite points to plot")
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    parts = _frame("Morisita index log-log plot")
    axis, ty = _y_axis(min(ys), max(ys), "ln I2")
    parts += axis
    x_lo, x_hi = min(xs), max(xs)
    plot_w = W - LEFT - RIGHT

    def tx(v):
        return LEFT + (v - x_lo) / ((x_hi - x_lo) or 1.0) * plot_w

    if window is not None:
        a, b = tx(math.log(window[0])), tx(math.log(window[1]))
        parts.append(f'<rect x="{_fmt(a)}" y="{TOP}" width="{_fmt(b - a)}" height="{H - TOP - BOTTOM}" '
                     f'fill="#2c7fb8" fill-opacity="0.12"/>')
    for x, y in pts:
        parts.append(f'<circle cx="{_fmt(tx(x))}" cy="{_fmt(ty(y))}" r="2.5" fill="#333"/>')
    parts.append(f'<text x="{(LEFT + W - RIGHT) / 2}" y="{H - BOTTOM + 35}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12">ln k (cells per axis), '
                 f'k = {min(inverse_edges)}..{max(inverse_edges)}</text>')
    parts.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path
