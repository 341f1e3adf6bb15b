"""Tiny deterministic SVG writer for report figures.

Hand-rolled on purpose: byte-identical output for identical inputs is part of
the reproducibility contract, so no plotting library (whose output embeds
versions, ids, or timestamps) is acceptable here.  Coordinates are formatted
with fixed precision."""

from __future__ import annotations

from dataclasses import dataclass, field

_PALETTE = ("#1f6f8b", "#d1495b", "#66999b", "#edae49", "#474954", "#8d6a9f")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


@dataclass
class Canvas:
    width: int = 640
    height: int = 400
    parts: list[str] = field(default_factory=list)

    def line(self, x1: float, y1: float, x2: float, y2: float, color: str = "#444444", width: float = 1.0) -> None:
        self.parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="{color}" stroke-width="{_fmt(width)}"/>'
        )

    def polyline(self, points: list[tuple[float, float]], color: str, width: float = 1.5) -> None:
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
        self.parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="{_fmt(width)}"/>'
        )

    def circle(self, x: float, y: float, r: float, color: str) -> None:
        self.parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r)}" fill="{color}"/>')

    def polygon(self, points: list[tuple[float, float]], color: str, opacity: float = 0.15) -> None:
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
        self.parts.append(
            f'<polygon points="{coords}" fill="{color}" fill-opacity="{opacity:.2f}" stroke="none"/>'
        )

    def rect(self, x: float, y: float, w: float, h: float, color: str) -> None:
        self.parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" height="{_fmt(h)}" fill="{color}"/>'
        )

    def text(self, x: float, y: float, s: str, size: int = 12, anchor: str = "start", color: str = "#222222") -> None:
        self.parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-family="monospace" font-size="{size}" '
            f'text-anchor="{anchor}" fill="{color}">{_escape(s)}</text>'
        )

    def render(self) -> str:
        body = "\n".join(self.parts)
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">\n'
            f'<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="#ffffff"/>\n'
            f"{body}\n</svg>\n"
        )


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _axis_range(values: list[float]) -> tuple[float, float]:
    lo = min(values)
    hi = max(values)
    if hi - lo < 1e-12:
        lo -= 0.5
        hi += 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def line_chart(
    series: dict[str, list[tuple[float, float]]],
    title: str,
    x_label: str,
    y_label: str,
    width: int = 640,
    height: int = 400,
    bands: dict[str, list[tuple[float, float, float]]] | None = None,
) -> str:
    """Multi-series line chart with legend; series are drawn in key order.

    `bands` maps a series name to (x, y_low, y_high) triples rendered as a
    translucent polygon behind the line."""
    cv = Canvas(width, height)
    ml, mr, mt, mb = 60, 20, 36, 44
    plot_w = width - ml - mr
    plot_h = height - mt - mb
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    if bands:
        for triples in bands.values():
            for _, ylo, yhi in triples:
                ys.extend((ylo, yhi))
    if not xs:
        cv.text(width / 2, height / 2, "no data", anchor="middle")
        return cv.render()
    x_lo, x_hi = _axis_range(xs)
    y_lo, y_hi = _axis_range(ys)

    def px(x: float) -> float:
        return ml + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return mt + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h

    cv.text(width / 2, 20, title, size=14, anchor="middle")
    cv.line(ml, mt, ml, mt + plot_h)
    cv.line(ml, mt + plot_h, ml + plot_w, mt + plot_h)
    for i in range(5):
        fy = y_lo + (y_hi - y_lo) * i / 4
        cv.line(ml - 4, py(fy), ml, py(fy))
        cv.text(ml - 8, py(fy) + 4, f"{fy:.3f}", size=10, anchor="end")
        fx = x_lo + (x_hi - x_lo) * i / 4
        cv.line(px(fx), mt + plot_h, px(fx), mt + plot_h + 4)
        cv.text(px(fx), mt + plot_h + 16, f"{fx:.2f}", size=10, anchor="middle")
    cv.text(width / 2, height - 8, x_label, size=11, anchor="middle")
    cv.text(14, mt - 10, y_label, size=11)
    for idx, (name, pts) in enumerate(series.items()):
        color = _PALETTE[idx % len(_PALETTE)]
        if bands and name in bands and len(bands[name]) > 1:
            triples = bands[name]
            ring = [(px(x), py(yhi)) for x, _, yhi in triples]
            ring += [(px(x), py(ylo)) for x, ylo, _ in reversed(triples)]
            cv.polygon(ring, color)
        pix = [(px(x), py(y)) for x, y in pts]
        if len(pix) > 1:
            cv.polyline(pix, color)
        for x, y in pix:
            cv.circle(x, y, 2.5, color)
        cv.rect(ml + 10, mt + 8 + 16 * idx, 10, 10, color)
        cv.text(ml + 26, mt + 17 + 16 * idx, name, size=11)
    return cv.render()


def histogram_chart(
    counts: dict[str, list[int]],
    edges: list[float],
    title: str,
    x_label: str,
    width: int = 640,
    height: int = 400,
) -> str:
    """Overlaid step histograms from shared bin edges."""
    series: dict[str, list[tuple[float, float]]] = {}
    for name, cs in counts.items():
        pts: list[tuple[float, float]] = []
        for i, c in enumerate(cs):
            pts.append((edges[i], float(c)))
            pts.append((edges[i + 1], float(c)))
        series[name] = pts
    return line_chart(series, title, x_label, "count", width, height)
