"""Minimal static SVG plots of witness traces."""

from __future__ import annotations

from html import escape
from typing import Mapping, Sequence

from .trace import Trace

PALETTE = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#ff9da7", "#9c755f"]
LINE_COLORS = ["#1f1f1f", "#d62728", "#2ca02c", "#9467bd", "#8c564b"]


def plot_trace(
    trace: Trace,
    channels: Sequence[str] | None = None,
    legend: Mapping[int, str] | None = None,
    title: str = "",
    width: int = 720,
    height: int = 360,
) -> str:
    """Polylines of ``channels`` over per-step bands coloured by path id."""
    channels = list(channels or trace.states)
    left, right, top, bottom = 60, 20, 30, 40
    legend = dict(legend or {})
    leg_h = 16 * (len(legend) + len(channels)) + 10
    total_h = height + leg_h
    pw, ph = width - left - right, height - top - bottom
    T = trace.H + 1
    vals = [float(v) for c in channels for v in trace[c]]
    lo, hi = min(vals), max(vals)
    if hi == lo:
        lo, hi = lo - 1, hi + 1
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    def sx(t):
        return left + pw * (t / max(T - 1, 1))

    def sy(v):
        return top + ph * (1 - (v - lo) / (hi - lo))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{total_h}" '
        f'viewBox="0 0 {width} {total_h}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{total_h}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{left}" y="18" font-size="13">{escape(title)}</text>')
    if trace.paths is not None:
        step = pw / max(T - 1, 1)
        for t, p in enumerate(trace.paths):
            x0 = max(left, sx(t) - step / 2)
            x1 = min(left + pw, sx(t) + step / 2)
            color = PALETTE[(p - 1) % len(PALETTE)] if p > 0 else "#cccccc"
            out.append(
                f'<rect x="{x0:.2f}" y="{top}" width="{x1 - x0:.2f}" height="{ph}" fill="{color}" fill-opacity="0.18">'
                f"<title>t={t} path {p}</title></rect>"
            )
            out.append(f'<text x="{sx(t):.2f}" y="{top + ph - 4}" text-anchor="middle" fill="#555">{p}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>')
    for k in range(5):
        v = lo + (hi - lo) * k / 4
        out.append(f'<text x="{left - 6}" y="{sy(v) + 4:.2f}" text-anchor="end">{v:.3g}</text>')
    for t in range(T):
        if T <= 25 or t % max(1, T // 10) == 0:
            out.append(f'<text x="{sx(t):.2f}" y="{top + ph + 16}" text-anchor="middle">{t}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{top + ph + 32}" text-anchor="middle">step</text>')
    for i, c in enumerate(channels):
        pts = " ".join(f"{sx(t):.2f},{sy(float(v)):.2f}" for t, v in enumerate(trace[c]))
        color = LINE_COLORS[i % len(LINE_COLORS)]
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.8"/>')
    y = height + 4
    for i, c in enumerate(channels):
        color = LINE_COLORS[i % len(LINE_COLORS)]
        out.append(f'<line x1="{left}" y1="{y}" x2="{left + 20}" y2="{y}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + 26}" y="{y + 4}">{escape(c)}</text>')
        y += 16
    for p, text in sorted(legend.items()):
        color = PALETTE[(p - 1) % len(PALETTE)]
        out.append(f'<rect x="{left}" y="{y - 6}" width="20" height="10" fill="{color}" fill-opacity="0.4"/>')
        out.append(f'<text x="{left + 26}" y="{y + 3}">path {p}: {escape(text)}</text>')
        y += 16
    out.append("</svg>")
    return "\n".join(out) + "\n"
