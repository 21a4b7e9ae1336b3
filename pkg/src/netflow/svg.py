"""Deterministic SVG drawings of networks."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .io import atomic_write_text
from .network import Network


@dataclass(frozen=True)
class SvgOptions:
    width: int = 600
    margin: float = 0.10
    stroke: str = "#1f4e79"
    stroke_width: float = 2.0
    junction_color: str = "#c0392b"
    endpoint_color: str = "#222222"
    marker_radius: float = 4.0
    digits: int = 6


def _bbox(points: np.ndarray) -> tuple[float, float, float, float]:
    lo, hi = points.min(axis=0), points.max(axis=0)
    return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])


def render_svg(network: Network, options: SvgOptions = SvgOptions()) -> str:
    """SVG text with one ``<path>`` per edge and a circle per vertex.

    The view box is the bounding box of the endpoints (of all samples when
    that box is degenerate) enlarged by ``options.margin`` on every side.
    The y axis is flipped so the picture has the usual orientation.
    """
    ends = np.array(list(network.endpoint_positions.values()))
    x0, y0, x1, y1 = _bbox(ends) if len(ends) else _bbox(np.vstack(network.all_samples()))
    if x1 - x0 <= 0 or y1 - y0 <= 0:
        x0, y0, x1, y1 = _bbox(np.vstack([ends, *network.all_samples()]) if len(ends) else np.vstack(network.all_samples()))
    span = max(x1 - x0, y1 - y0, 1e-12)
    pad = options.margin * span
    vx, vy = x0 - pad, -(y1 + pad)
    vw, vh = (x1 - x0) + 2 * pad, (y1 - y0) + 2 * pad
    scale = span / options.width
    d = options.digits

    def f(v: float) -> str:
        return f"{v:.{d}f}"

    height = max(1, round(options.width * vh / vw))
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{options.width}" height="{height}" '
        f'viewBox="{f(vx)} {f(vy)} {f(vw)} {f(vh)}">',
    ]
    sw = options.stroke_width * scale
    for e, c in zip(network.topology.edges, network.curves):
        pts = " L ".join(f"{f(p[0])} {f(-p[1])}" for p in c.samples)
        out.append(
            f'<path id="edge-{e.id}" d="M {pts}" fill="none" stroke="{options.stroke}" '
            f'stroke-width="{f(sw)}" stroke-linejoin="round"/>'
        )
    r = options.marker_radius * scale
    for m in network.topology.junctions:
        p = network.junction_position(m)
        out.append(f'<circle class="junction" id="vertex-{m}" cx="{f(p[0])}" cy="{f(-p[1])}" r="{f(r)}" fill="{options.junction_color}"/>')
    for v, p in network.endpoint_positions.items():
        out.append(f'<circle class="endpoint" id="vertex-{v}" cx="{f(p[0])}" cy="{f(-p[1])}" r="{f(r * 0.75)}" fill="{options.endpoint_color}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(network: Network, path: str | Path, options: SvgOptions = SvgOptions()) -> None:
    atomic_write_text(path, render_svg(network, options))
