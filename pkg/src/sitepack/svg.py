"""Deterministic SVG rendering of layouts and coverage layouts.

Visual conventions: chip sites shade darker the later they appear in the
routed chain, the controller is red, routes are dark polylines, the bounding
box is a dashed yellow outline, and each port pin is a red dot. One track is
`scale` pixels; the y axis is flipped so the grid origin sits bottom-left.
"""

from __future__ import annotations

from .drc import CoverLayout
from .geometry import Rect
from .model import Layout, compute_bounding_box, controller_pin, site_pin

_LIGHT = (0xC6, 0xDB, 0xEF)
_DARK = (0x08, 0x30, 0x6B)


def _ramp(t: float) -> str:
    rgb = tuple(round(a + (b - a) * t) for a, b in zip(_LIGHT, _DARK))
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _connection_sequence(layout: Layout) -> dict[int, int]:
    """Site id -> chain position, derived from the routed pin order."""
    pin_to_site = {}
    for s in layout.sites:
        if s.position is not None:
            pin_to_site[site_pin(layout, s)] = s.id
    visited: list[int] = []
    for path in layout.routes:
        for pin in path.endpoints:
            sid = pin_to_site.get(pin)
            if sid is not None and sid not in visited:
                visited.append(sid)
    for s in layout.sites:  # unrouted sites follow in id order
        if s.id not in visited:
            visited.append(s.id)
    return {sid: i for i, sid in enumerate(visited)}


def render_svg(layout: Layout, scale: int = 2) -> str:
    """Render a placed (and usually routed) layout; output is byte-stable."""
    pad = 2 * scale
    try:
        bbox = compute_bounding_box(layout)
    except Exception:
        bbox = Rect(0, 0, 1, 1)
    width = bbox.w * scale + 2 * pad
    height = bbox.h * scale + 2 * pad

    def sx(x: float) -> float:
        return (x - bbox.x) * scale + pad

    def sy(y: float) -> float:
        return height - ((y - bbox.y) * scale + pad)

    def rect_attrs(r: Rect) -> str:
        return (
            f'x="{sx(r.x):g}" y="{sy(r.y2):g}" '
            f'width="{r.w * scale:g}" height="{r.h * scale:g}"'
        )

    seq = _connection_sequence(layout)
    denom = max(len(seq) - 1, 1)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" height="{height:g}" '
        f'viewBox="0 0 {width:g} {height:g}">',
        f'<rect x="0" y="0" width="{width:g}" height="{height:g}" fill="#ffffff"/>',
    ]
    for s in sorted(layout.sites, key=lambda s: s.id):
        if s.position is None:
            continue
        color = _ramp(seq.get(s.id, 0) / denom)
        lines.append(
            f'<rect class="site" {rect_attrs(layout.site_rect(s))} '
            f'fill="{color}" stroke="#243b53" stroke-width="1"/>'
        )
    ctrl = layout.controller_rect()
    if ctrl is not None:
        lines.append(
            f'<rect class="controller" {rect_attrs(ctrl)} '
            f'fill="#d62728" stroke="#7a1416" stroke-width="1"/>'
        )
    for path in layout.routes:
        pts = " ".join(f"{sx(x + 0.5):g},{sy(y + 0.5):g}" for x, y in path.cells)
        lines.append(
            f'<polyline class="route" points="{pts}" fill="none" '
            f'stroke="#1f3d99" stroke-width="{max(scale * 0.8, 1):g}"/>'
        )
    lines.append(
        f'<rect class="bbox" {rect_attrs(bbox)} fill="none" '
        f'stroke="#e6c519" stroke-width="1.5" stroke-dasharray="6,4"/>'
    )
    pin_points = []
    for s in sorted(layout.sites, key=lambda s: s.id):
        if s.position is not None:
            pin_points.append(site_pin(layout, s))
    if layout.controller is not None and layout.controller.position is not None:
        pin_points.append(controller_pin(layout))
    for px, py in pin_points:
        lines.append(
            f'<circle class="port" cx="{sx(px + 0.5):g}" cy="{sy(py + 0.5):g}" '
            f'r="{max(scale * 0.45, 1):g}" fill="#d62728"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


_PALETTE = (
    "#8ecae6", "#ffb703", "#90be6d", "#f28482",
    "#b5838d", "#a8dadc", "#cdb4db", "#f4a261",
)


def render_cover_svg(layout: CoverLayout, scale: int = 4) -> str:
    """Render a coverage layout: templates by palette color, tracks dark gray."""
    comps = layout.components
    bbox = layout.bbox() if comps else Rect(0, 0, 1, 1)
    pad = 2 * scale
    width = max(bbox.w, 1) * scale + 2 * pad
    height = max(bbox.h, 1) * scale + 2 * pad
    tmpl_ids = sorted(layout.templates)
    color_of = {tid: _PALETTE[i % len(_PALETTE)] for i, tid in enumerate(tmpl_ids)}
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" height="{height:g}" '
        f'viewBox="0 0 {width:g} {height:g}">',
        f'<rect x="0" y="0" width="{width:g}" height="{height:g}" fill="#ffffff"/>',
    ]
    for comp in comps:
        r = comp.rect
        x = (r.x - bbox.x) * scale + pad
        y = height - ((r.y2 - bbox.y) * scale + pad)
        fill = "#495057" if comp.is_track else color_of[comp.kind]
        lines.append(
            f'<rect class="{"track" if comp.is_track else "template"}" '
            f'x="{x:g}" y="{y:g}" width="{r.w * scale:g}" height="{r.h * scale:g}" '
            f'fill="{fill}" stroke="#212529" stroke-width="0.5"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
