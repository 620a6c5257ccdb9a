import xml.etree.ElementTree as ET

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from cohortflow.alert import SensitiveLocation
from cohortflow.render import GRAY, PALETTE, cohort_colors, parse_svg_lines, render_frame_svg

SVG = "{http://www.w3.org/2000/svg}"


def test_empty_frame_has_only_border():
    root = ET.fromstring(render_frame_svg([], (640.0, 480.0)))
    assert root.get("viewBox") == "0 0 640.0 480.0" and root.get("version") == "1.1"
    shapes = [el for el in root.iter() if el.tag in (SVG + "line", SVG + "circle", SVG + "rect")]
    assert [el.get("class") for el in shapes] == ["arena"]


def test_two_cohorts_two_colors():
    links = [(0, 0, 1, 1, 4), (2, 2, 3, 3, 9), (5, 5, 6, 6, -1), (1, 1, 2, 2, 4)]
    strokes = {s for *_, s in parse_svg_lines(render_frame_svg(links, (10.0, 10.0)))}
    assert strokes - {GRAY} == {PALETTE[0], PALETTE[1]}
    assert GRAY in strokes


def test_palette_starts_red_then_blue():
    r, g, b = (int(PALETTE[0][i:i + 2], 16) for i in (1, 3, 5))
    assert r > g and r > b
    r, g, b = (int(PALETTE[1][i:i + 2], 16) for i in (1, 3, 5))
    assert b > r and b > g
    assert cohort_colors([7, 3, -1, 3]) == {3: PALETTE[0], 7: PALETTE[1]}


coord = st.floats(0, 1000, allow_nan=False)


@given(st.lists(st.tuples(coord, coord, coord, coord, st.integers(-1, 12)), max_size=20))
def test_endpoints_parse_back_exactly(links):
    back = parse_svg_lines(render_frame_svg(links, (1000.0, 1000.0)))
    assert [b[:5] for b in back] == [(float(a), float(b), float(c), float(d), k) for a, b, c, d, k in links]


def test_locations_drawn():
    locs = [SensitiveLocation("gate <1>", 10.0, 20.0, 5.0), SensitiveLocation("b", 1.0, 2.0, 3.0)]
    root = ET.fromstring(render_frame_svg([], (50.0, 50.0), locs, frame=3))
    circles = list(root.iter(SVG + "circle"))
    assert [c.get("data-id") for c in circles] == ["gate <1>", "b"]
    assert float(circles[0].get("r")) == 5.0
    assert root.find(SVG + "title").text == "frame 3"


def test_numpy_values_accepted():
    links = [(np.float64(0.1), np.float64(0.2), np.float64(0.3), np.float64(0.4), np.int64(0))]
    assert parse_svg_lines(render_frame_svg(links, (1.0, 1.0)))[0][:4] == (0.1, 0.2, 0.3, 0.4)
