"""SVG 1.1 rendering of per-frame flow vectors.

The viewBox is ``0 0 W H`` in pixel units with the identity transform, so an
arrow drawn for a link from (x0, y0) to (x1, y1) has exactly those
coordinates in the file. Cohorts are colored from PALETTE by order of first
appearance (cohort id ascending); unlabeled vectors are gray.
"""
from __future__ import annotations

import xml.etree.ElementTree as ET
from xml.sax.saxutils import quoteattr

from .detect import format_float

# red and blue shades come first
PALETTE = (
    "#d62728",  # red
    "#1f5fbf",  # blue
    "#ff7f7f",  # light red
    "#7fa8e6",  # light blue
    "#2ca02c",
    "#9467bd",
    "#ff9f1c",
    "#17becf",
)
GRAY = "#808080"


def cohort_colors(cohort_ids):
    """Map each non-negative cohort id (ascending) to a palette color; ids cycle past the palette."""
    ids = sorted({int(c) for c in cohort_ids if int(c) >= 0})
    return {c: PALETTE[i % len(PALETTE)] for i, c in enumerate(ids)}


def _marker(color):
    mid = "arrow-" + color.lstrip("#")
    return (
        f'<marker id="{mid}" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="4" '
        f'markerHeight="4" orient="auto"><path d="M0,0 L10,5 L0,10 z" fill="{color}"/></marker>'
    ), mid


def render_frame_svg(links, arena, locations=(), colors=None, frame=None) -> str:
    """One frame's SVG document.

    ``links`` is a sequence of (from_x, from_y, to_x, to_y, cohort_id);
    ``locations`` of SensitiveLocation-like objects (id, x, y, radius).
    """
    w, h = arena
    links = list(links)
    colors = colors if colors is not None else cohort_colors(l[4] for l in links)
    used = sorted({colors.get(int(l[4]), GRAY) for l in links})
    fw, fh = format_float(float(w)), format_float(float(h))
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{fw}" height="{fh}" '
        f'viewBox="0 0 {fw} {fh}">',
    ]
    if frame is not None:
        out.append(f"<title>frame {int(frame)}</title>")
    if used:
        defs = [_marker(c)[0] for c in used]
        out.append("<defs>" + "".join(defs) + "</defs>")
    out.append(f'<rect class="arena" x="0" y="0" width="{fw}" height="{fh}" fill="none" stroke="#000000"/>')
    for loc in locations:
        out.append(
            f'<circle class="location" data-id={quoteattr(str(loc.id))} cx="{format_float(float(loc.x))}" '
            f'cy="{format_float(float(loc.y))}" r="{format_float(float(loc.radius))}" '
            'fill="none" stroke="#000000" stroke-dasharray="4 2"/>'
        )
    for x0, y0, x1, y1, cid in links:
        color = colors.get(int(cid), GRAY)
        mid = _marker(color)[1]
        out.append(
            f'<line class="vec" data-cohort="{int(cid)}" x1="{format_float(float(x0))}" '
            f'y1="{format_float(float(y0))}" x2="{format_float(float(x1))}" y2="{format_float(float(y1))}" '
            f'stroke="{color}" stroke-width="1" marker-end="url(#{mid})"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def parse_svg_lines(text):
    """Read back (x1, y1, x2, y2, cohort_id, stroke) for every vector arrow."""
    root = ET.fromstring(text)
    ns = "{http://www.w3.org/2000/svg}"
    out = []
    for el in root.iter(ns + "line"):
        if el.get("class") != "vec":
            continue
        out.append(
            (float(el.get("x1")), float(el.get("y1")), float(el.get("x2")), float(el.get("y2")),
             int(el.get("data-cohort")), el.get("stroke"))
        )
    return out
