import numpy as np
import pytest

from datefield.layout import BBox, ConnComp, TextLine


def comp(x0, y0, x1, y1, i=0, pixels=None):
    box = BBox(x0, y0, x1, y1)
    return ConnComp(i, box, box.area if pixels is None else pixels)


def line_of(boxes, y_top=0, y_bottom=None):
    comps = tuple(comp(*b, i=i) for i, b in enumerate(boxes))
    if y_bottom is None:
        y_bottom = max((b[3] for b in boxes), default=0)
    return TextLine(y_top, y_bottom, comps)


def date_boxes(x=0, digit=(10, 40), sep=(0, 50), width=10, gap=5, sep_width=None):
    """Eight boxes: digits share ``digit`` y-range, positions 3 and 6 use ``sep``."""
    out = []
    for k in range(8):
        y0, y1 = sep if k in (2, 5) else digit
        w = sep_width if (sep_width and k in (2, 5)) else width
        out.append((x, y0, x + w - 1, y1))
        x += w + gap
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


# -- acceptance reporting: one line per criterion in the terminal summary

_CRITERIA: list[tuple[str, str, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    number, title = mark.args
    detail = "; ".join(v for k, v in item.user_properties if k == "detail")
    _CRITERIA.append((str(number), title, "PASS" if rep.passed else "FAIL", detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status, detail in sorted(_CRITERIA, key=lambda r: int(r[0])):
        line = f"[{status}] criterion {number}: {title}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))
