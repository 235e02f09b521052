"""Tiny hand-written SVG charts (line plots, error bars, triangular heatmaps)."""

from __future__ import annotations

from html import escape

W, H = 480, 320
PAD_L, PAD_R, PAD_T, PAD_B = 60, 20, 30, 45
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _scale(lo, hi, a, b):
    if hi == lo:
        hi = lo + 1.0
    return lambda x: a + (x - lo) / (hi - lo) * (b - a)


def _frame(title, xlabel, ylabel, xlo, xhi, ylo, yhi):
    sx = _scale(xlo, xhi, PAD_L, W - PAD_R)
    sy = _scale(ylo, yhi, H - PAD_B, PAD_T)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<line x1="{PAD_L}" y1="{H - PAD_B}" x2="{W - PAD_R}" y2="{H - PAD_B}" stroke="black"/>',
        f'<line x1="{PAD_L}" y1="{PAD_T}" x2="{PAD_L}" y2="{H - PAD_B}" stroke="black"/>',
        f'<text x="{W / 2:.1f}" y="{H - 8}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="14" y="{H / 2:.1f}" text-anchor="middle" transform="rotate(-90 14 {H / 2:.1f})">{escape(ylabel)}</text>',
    ]
    for k in range(5):
        xv = xlo + (xhi - xlo) * k / 4
        yv = ylo + (yhi - ylo) * k / 4
        parts.append(f'<text x="{sx(xv):.1f}" y="{H - PAD_B + 14}" text-anchor="middle">{xv:.4g}</text>')
        parts.append(f'<text x="{PAD_L - 4}" y="{sy(yv) + 4:.1f}" text-anchor="end">{yv:.4g}</text>')
    return parts, sx, sy


def line_chart(series: dict, title="", xlabel="", ylabel="") -> str:
    """``series`` maps a label to ``(xs, ys)``."""
    xs = [x for s in series.values() for x in s[0]] or [0.0]
    ys = [y for s in series.values() for y in s[1]] or [0.0]
    parts, sx, sy = _frame(title, xlabel, ylabel, min(xs), max(xs), min(0.0, min(ys)), max(ys))
    for k, (label, (x, y)) in enumerate(series.items()):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{sx(a):.1f},{sy(b):.1f}" for a, b in zip(x, y))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{W - PAD_R - 4}" y="{PAD_T + 12 * (k + 1)}" text-anchor="end" '
                     f'fill="{color}">{escape(str(label))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def errorbar_chart(x, mean, lo, hi, title="", xlabel="", ylabel="") -> str:
    parts, sx, sy = _frame(title, xlabel, ylabel, min(x), max(x), min(lo), max(hi))
    for a, m, l, h in zip(x, mean, lo, hi):
        parts.append(f'<line x1="{sx(a):.1f}" y1="{sy(l):.1f}" x2="{sx(a):.1f}" y2="{sy(h):.1f}" stroke="#555"/>')
        parts.append(f'<circle cx="{sx(a):.1f}" cy="{sy(m):.1f}" r="3" fill="{COLORS[0]}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def heatmap(rows, title="", xlabel="", ylabel="") -> str:
    """Cells from ``(x, y, value)`` triples on an integer grid, values in [0, 1]."""
    xs = [r[0] for r in rows]
    ys = [r[1] for r in rows]
    parts, sx, sy = _frame(title, xlabel, ylabel, min(xs) - 0.5, max(xs) + 0.5, min(ys) - 0.5, max(ys) + 0.5)
    cw = abs(sx(1) - sx(0))
    ch = abs(sy(1) - sy(0))
    for x, y, val in rows:
        level = max(0.0, min(1.0, float(val)))
        r, g, b = int(255 * level), int(80 + 100 * (1 - abs(2 * level - 1))), int(255 * (1 - level))
        parts.append(f'<rect x="{sx(x) - cw / 2:.1f}" y="{sy(y) - ch / 2:.1f}" width="{cw:.1f}" '
                     f'height="{ch:.1f}" fill="rgb({r},{g},{b})"><title>{val:.3f}</title></rect>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
