"""Small deterministic SVG charts.

Pure string assembly with fixed-precision coordinates, so identical inputs
produce byte-identical files. Three chart kinds cover the reporting needs:
multi-series line charts, quantile fan charts, and labeled bar charts.
"""

import math

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_MARGIN_LEFT = 62.0
_MARGIN_RIGHT = 16.0
_MARGIN_TOP = 34.0
_MARGIN_BOTTOM = 42.0


def _fmt(x):
    # fixed two decimals keeps output stable across runs and platforms
    return f"{x:.2f}"


def _fmt_tick(x):
    if x == 0:
        return "0"
    a = abs(x)
    if a >= 1e5 or a < 1e-3:
        return f"{x:.1e}"
    if a >= 100:
        return f"{x:.0f}"
    if a >= 1:
        return f"{x:.4g}"
    return f"{x:.3g}"


def _ticks(lo, hi, target=5):
    """Round tick locations covering [lo, hi]."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("tick range must be finite")
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    raw = span / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mult * mag
        if span / step <= target + 0.5:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-9 * span:
        ticks.append(0.0 if abs(v) < step * 1e-9 else v)
        v += step
    return ticks


class _Frame:
    """Maps data coordinates into the plot rectangle of a fixed-size canvas."""

    def __init__(self, width, height, x_lo, x_hi, y_lo, y_hi):
        self.width = float(width)
        self.height = float(height)
        if x_hi <= x_lo:
            x_hi = x_lo + 1.0
        if y_hi <= y_lo:
            pad = 1.0 if y_lo == 0 else abs(y_lo) * 0.1
            y_lo, y_hi = y_lo - pad, y_lo + pad
        self.x_lo, self.x_hi = float(x_lo), float(x_hi)
        self.y_lo, self.y_hi = float(y_lo), float(y_hi)
        self.px_lo = _MARGIN_LEFT
        self.px_hi = self.width - _MARGIN_RIGHT
        self.py_lo = self.height - _MARGIN_BOTTOM
        self.py_hi = _MARGIN_TOP

    def x(self, v):
        f = (v - self.x_lo) / (self.x_hi - self.x_lo)
        return self.px_lo + f * (self.px_hi - self.px_lo)

    def y(self, v):
        f = (v - self.y_lo) / (self.y_hi - self.y_lo)
        return self.py_lo + f * (self.py_hi - self.py_lo)

    def polyline_points(self, xs, ys):
        return " ".join(
            f"{_fmt(self.x(a))},{_fmt(self.y(b))}" for a, b in zip(xs, ys)
        )


def _header(width, height, title):
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" '
        f'height="{height:g}" viewBox="0 0 {width:g} {height:g}">',
        f'<rect width="{width:g}" height="{height:g}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_fmt(width / 2)}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{_escape(title)}</text>'
        )
    return parts


def _escape(text):
    return (
        str(text)
        .replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
    )


def _axes(frame, x_label, y_label):
    parts = []
    parts.append(
        f'<rect x="{_fmt(frame.px_lo)}" y="{_fmt(frame.py_hi)}" '
        f'width="{_fmt(frame.px_hi - frame.px_lo)}" '
        f'height="{_fmt(frame.py_lo - frame.py_hi)}" '
        f'fill="none" stroke="#444" stroke-width="1"/>'
    )
    for t in _ticks(frame.x_lo, frame.x_hi):
        px = frame.x(t)
        parts.append(
            f'<line x1="{_fmt(px)}" y1="{_fmt(frame.py_lo)}" x2="{_fmt(px)}" '
            f'y2="{_fmt(frame.py_lo + 4)}" stroke="#444" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(px)}" y="{_fmt(frame.py_lo + 16)}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="10">'
            f"{_fmt_tick(t)}</text>"
        )
    for t in _ticks(frame.y_lo, frame.y_hi):
        py = frame.y(t)
        parts.append(
            f'<line x1="{_fmt(frame.px_lo - 4)}" y1="{_fmt(py)}" '
            f'x2="{_fmt(frame.px_lo)}" y2="{_fmt(py)}" '
            f'stroke="#444" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(frame.px_lo - 7)}" y="{_fmt(py + 3)}" '
            f'text-anchor="end" font-family="sans-serif" font-size="10">'
            f"{_fmt_tick(t)}</text>"
        )
    if x_label:
        parts.append(
            f'<text x="{_fmt((frame.px_lo + frame.px_hi) / 2)}" '
            f'y="{_fmt(frame.py_lo + 32)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_escape(x_label)}</text>'
        )
    if y_label:
        cx, cy = 14.0, (frame.py_lo + frame.py_hi) / 2
        parts.append(
            f'<text x="{_fmt(cx)}" y="{_fmt(cy)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11" '
            f'transform="rotate(-90 {_fmt(cx)} {_fmt(cy)})">'
            f"{_escape(y_label)}</text>"
        )
    return parts


def _finite_range(arrays):
    lo, hi = math.inf, -math.inf
    for a in arrays:
        a = np.asarray(a, dtype=np.float64)
        m = np.isfinite(a)
        if m.any():
            lo = min(lo, float(a[m].min()))
            hi = max(hi, float(a[m].max()))
    if lo > hi:
        lo, hi = 0.0, 1.0
    return lo, hi


def _pad_range(lo, hi, frac=0.05):
    span = hi - lo
    if span == 0:
        span = 1.0 if hi == 0 else abs(hi) * 0.2
    return lo - frac * span, hi + frac * span


def line_chart(series, title="", x_label="t", y_label="", width=640,
               height=400, y_range=None, h_lines=()):
    """SVG multi-series line chart.

    series: iterable of (label, x_array, y_array). h_lines draws dashed
    horizontal reference lines at the given y values.
    """
    series = [(str(lab), np.asarray(x, dtype=np.float64),
               np.asarray(y, dtype=np.float64)) for lab, x, y in series]
    if not series:
        raise ValueError("need at least one series")
    x_lo, x_hi = _finite_range([x for _, x, _ in series])
    if y_range is None:
        y_lo, y_hi = _pad_range(*_finite_range(
            [y for _, _, y in series] + [np.asarray(h_lines)]))
    else:
        y_lo, y_hi = y_range
    frame = _Frame(width, height, x_lo, x_hi, y_lo, y_hi)
    parts = _header(width, height, title)
    parts += _axes(frame, x_label, y_label)
    for y in h_lines:
        py = frame.y(y)
        parts.append(
            f'<line x1="{_fmt(frame.px_lo)}" y1="{_fmt(py)}" '
            f'x2="{_fmt(frame.px_hi)}" y2="{_fmt(py)}" stroke="#888" '
            f'stroke-width="1" stroke-dasharray="5,4"/>'
        )
    show_legend = any(lab for lab, _, _ in series) and len(series) <= 8
    for idx, (lab, x, y) in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        pts = frame.polyline_points(x, y)
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="1.3"/>'
        )
        if show_legend and lab:
            ly = _MARGIN_TOP + 6 + 14 * idx
            lx = frame.px_hi - 130
            parts.append(
                f'<line x1="{_fmt(lx)}" y1="{_fmt(ly)}" x2="{_fmt(lx + 18)}" '
                f'y2="{_fmt(ly)}" stroke="{color}" stroke-width="2"/>'
            )
            parts.append(
                f'<text x="{_fmt(lx + 23)}" y="{_fmt(ly + 3.5)}" '
                f'font-family="sans-serif" font-size="10">{_escape(lab)}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def fan_chart(x, matrix, title="", x_label="t", y_label="",
              quantiles=(0.05, 0.25, 0.75, 0.95), width=640, height=400):
    """Quantile fan over an ensemble matrix (rows = paths, cols = times).

    Draws nested bands between symmetric quantile pairs plus the median line.
    """
    x = np.asarray(x, dtype=np.float64)
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != x.size:
        raise ValueError("matrix must be (n_paths, len(x))")
    qs = sorted(quantiles)
    if len(qs) % 2 != 0:
        raise ValueError("quantiles must come in symmetric pairs")
    levels = np.quantile(matrix, qs + [0.5], axis=0)
    median = levels[-1]
    y_lo, y_hi = _pad_range(float(levels.min()), float(levels.max()))
    frame = _Frame(width, height, float(x[0]), float(x[-1]), y_lo, y_hi)
    parts = _header(width, height, title)
    parts += _axes(frame, x_label, y_label)
    n_bands = len(qs) // 2
    for b in range(n_bands):
        lo_curve = levels[b]
        hi_curve = levels[len(qs) - 1 - b]
        fwd = frame.polyline_points(x, hi_curve)
        bwd = frame.polyline_points(x[::-1], lo_curve[::-1])
        opacity = 0.15 + 0.12 * b
        parts.append(
            f'<polygon points="{fwd} {bwd}" fill="{PALETTE[0]}" '
            f'fill-opacity="{opacity:.2f}" stroke="none"/>'
        )
    parts.append(
        f'<polyline points="{frame.polyline_points(x, median)}" fill="none" '
        f'stroke="{PALETTE[0]}" stroke-width="1.6"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def bar_chart(labels, values, title="", y_label="", width=640, height=400,
              h_lines=(), symmetric=False):
    """Labeled vertical bars, e.g. per-bucket z scores with reference lines."""
    values = [float(v) for v in values]
    labels = [str(s) for s in labels]
    if len(labels) != len(values):
        raise ValueError("labels and values must have equal length")
    if not values:
        raise ValueError("need at least one bar")
    finite = [v for v in values if math.isfinite(v)] or [0.0]
    lo = min(0.0, min(finite), *(list(h_lines) or [0.0]))
    hi = max(0.0, max(finite), *(list(h_lines) or [0.0]))
    if symmetric:
        m = max(abs(lo), abs(hi))
        lo, hi = -m, m
    y_lo, y_hi = _pad_range(lo, hi)
    frame = _Frame(width, height, 0.0, float(len(values)), y_lo, y_hi)
    parts = _header(width, height, title)
    parts += _axes(frame, "", y_label)
    for y in h_lines:
        py = frame.y(y)
        parts.append(
            f'<line x1="{_fmt(frame.px_lo)}" y1="{_fmt(py)}" '
            f'x2="{_fmt(frame.px_hi)}" y2="{_fmt(py)}" stroke="#d62728" '
            f'stroke-width="1" stroke-dasharray="5,4"/>'
        )
    zero_py = frame.y(0.0)
    slot = (frame.px_hi - frame.px_lo) / len(values)
    for i, v in enumerate(values):
        if not math.isfinite(v):
            v = y_hi if v > 0 else y_lo
        x0 = frame.px_lo + slot * (i + 0.15)
        w = slot * 0.7
        py = frame.y(v)
        top, hgt = (py, zero_py - py) if v >= 0 else (zero_py, py - zero_py)
        parts.append(
            f'<rect x="{_fmt(x0)}" y="{_fmt(top)}" width="{_fmt(w)}" '
            f'height="{_fmt(hgt)}" fill="{PALETTE[0]}" fill-opacity="0.8"/>'
        )
        cx = frame.px_lo + slot * (i + 0.5)
        parts.append(
            f'<text x="{_fmt(cx)}" y="{_fmt(frame.py_lo + 16)}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="10">'
            f"{_escape(labels[i])}</text>"
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
