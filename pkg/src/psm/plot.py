"""Minimal deterministic SVG rendering for distribution results."""

from __future__ import annotations

_W, _H = 640, 360
_PAD = 44


def _scale(v, lo, hi, out_lo, out_hi):
    if hi <= lo:
        return (out_lo + out_hi) / 2
    return out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo)


def svg_histogram(
    edges: list[float],
    density: list[float],
    overlay: list[float] | None = None,
    title: str = "",
) -> str:
    """Histogram bars plus an optional fitted-curve overlay."""
    lo, hi = edges[0], edges[-1]
    top = max(max(density, default=0.0), max(overlay or [0.0]))
    top = top * 1.08 if top > 0 else 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
    ]
    for i, d in enumerate(density):
        x0 = _scale(edges[i], lo, hi, _PAD, _W - _PAD)
        x1 = _scale(edges[i + 1], lo, hi, _PAD, _W - _PAD)
        y = _scale(d, 0, top, _H - _PAD, _PAD)
        parts.append(
            f'<rect x="{x0:.2f}" y="{y:.2f}" width="{max(x1 - x0, 0.5):.2f}" '
            f'height="{_H - _PAD - y:.2f}" fill="#4e79a7" fill-opacity="0.65"/>'
        )
    if overlay:
        points = []
        for i, v in enumerate(overlay):
            cx = _scale((edges[i] + edges[i + 1]) / 2, lo, hi, _PAD, _W - _PAD)
            cy = _scale(v, 0, top, _H - _PAD, _PAD)
            points.append(f"{cx:.2f},{cy:.2f}")
        parts.append(
            f'<polyline points="{" ".join(points)}" fill="none" '
            f'stroke="#e8b01d" stroke-width="2"/>'
        )
    parts.append(
        f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="#333"/>'
    )
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        v = lo + frac * (hi - lo)
        x = _scale(v, lo, hi, _PAD, _W - _PAD)
        parts.append(
            f'<text x="{x:.1f}" y="{_H - _PAD + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{v:.4g}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def svg_categorical(values: dict[str, float], title: str = "") -> str:
    """Bar chart for categorical probability tables."""
    items = list(values.items())
    top = max([p for _, p in items], default=1.0) * 1.1 or 1.0
    n = max(len(items), 1)
    band = (_W - 2 * _PAD) / n
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
    ]
    for i, (label, p) in enumerate(items):
        x = _PAD + i * band + band * 0.1
        y = _scale(p, 0, top, _H - _PAD, _PAD)
        parts.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{band * 0.8:.2f}" '
            f'height="{_H - _PAD - y:.2f}" fill="#4e79a7"/>'
        )
        parts.append(
            f'<text x="{x + band * 0.4:.1f}" y="{_H - _PAD + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
