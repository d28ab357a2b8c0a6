import numpy as np
import pytest

from incmart import svgplot


X = np.linspace(0.0, 1.0, 20)
Y = np.sin(X * 3.0)


def test_line_chart_basic_structure():
    svg = svgplot.line_chart([("wave", X, Y)], title="demo", y_label="y")
    assert svg.startswith("<svg ")
    assert svg.rstrip().endswith("</svg>")
    assert "<polyline" in svg
    assert "demo" in svg
    assert "wave" in svg


def test_line_chart_deterministic():
    a = svgplot.line_chart([("s", X, Y)], title="t")
    b = svgplot.line_chart([("s", X, Y)], title="t")
    assert a == b


def test_line_chart_multi_series_colors():
    svg = svgplot.line_chart([("a", X, Y), ("b", X, Y + 1.0)])
    assert svgplot.PALETTE[0] in svg
    assert svgplot.PALETTE[1] in svg


def test_line_chart_empty_rejected():
    with pytest.raises(ValueError):
        svgplot.line_chart([])


def test_line_chart_h_lines_dashed():
    svg = svgplot.line_chart([("", X, Y)], h_lines=(0.0,))
    assert "stroke-dasharray" in svg


def test_line_chart_handles_nonfinite():
    y = Y.copy()
    y[3] = np.nan
    svg = svgplot.line_chart([("", X, y)])
    assert "<polyline" in svg


def test_title_escaped():
    svg = svgplot.line_chart([("", X, Y)], title="a < b & c")
    assert "a &lt; b &amp; c" in svg


def test_fan_chart_bands_and_median():
    matrix = np.random.default_rng(0).normal(size=(50, X.size)).cumsum(axis=1)
    svg = svgplot.fan_chart(X, matrix)
    # two symmetric quantile pairs -> two polygons, plus one median polyline
    assert svg.count("<polygon") == 2
    assert svg.count("<polyline") == 1


def test_fan_chart_shape_mismatch():
    with pytest.raises(ValueError):
        svgplot.fan_chart(X, np.zeros((4, X.size + 1)))


def test_fan_chart_odd_quantiles_rejected():
    with pytest.raises(ValueError):
        svgplot.fan_chart(X, np.zeros((4, X.size)), quantiles=(0.1, 0.5, 0.9))


def test_bar_chart_counts_rects():
    svg = svgplot.bar_chart(["a", "b", "c"], [1.0, -2.0, 0.5])
    assert svg.count("<rect") == 2 + 3  # background and frame plus one per bar
    assert ">a<" in svg


def test_bar_chart_mismatch_rejected():
    with pytest.raises(ValueError):
        svgplot.bar_chart(["a"], [1.0, 2.0])
    with pytest.raises(ValueError):
        svgplot.bar_chart([], [])


def test_bar_chart_nonfinite_clamped():
    svg = svgplot.bar_chart(["a", "b"], [float("inf"), 1.0], h_lines=(4.0,))
    assert "<rect" in svg


def test_ticks_cover_range():
    ticks = svgplot._ticks(0.0, 1.0)
    assert ticks[0] >= 0.0 and ticks[-1] <= 1.0 + 1e-9
    assert len(ticks) >= 3
    wide = svgplot._ticks(-1e6, 5.0)
    assert len(wide) >= 2


def test_page_never_references_external_hosts():
    svg = svgplot.line_chart([("", X, Y)])
    assert "http" not in svg.replace("http://www.w3.org/2000/svg", "")
