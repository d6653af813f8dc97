"""Deterministic SVG rendering of an envelope with overlaid trajectories.

No plotting library: the byte output must be identical across runs, so
the SVG is assembled from formatted strings only.
"""

import numpy as np

from .errors import ConfigError, DataError
from .ioutil import write_text_atomic

MARGIN_LEFT = 54.0
MARGIN_RIGHT = 12.0
MARGIN_TOP = 28.0
MARGIN_BOTTOM = 32.0

BAND_FILL = "#9ecae1"
MEAN_COLOR = "#08306b"
NATIVE_COLOR = "#969696"
TEST_COLOR = "#238b45"
OUTSIDE_COLOR = "#cb181d"


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _points(xs, ys) -> str:
    return " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in zip(xs, ys))


def envelope_svg(*, mean, lower, upper, natives: dict, test_values=None,
                 outside=None, title: str = "", width: int = 720,
                 height: int = 360, t_range=None) -> str:
    """Shaded band + mean line + native and test trajectories.

    ``outside`` marks test points beyond the band; each maximal run is
    drawn as its own class="outside" element so anomalous stretches are
    visually (and programmatically) distinguishable.
    """
    mean = np.asarray(mean, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    t_len = mean.size
    if lower.size != t_len or upper.size != t_len:
        raise DataError("plot: band arrays must match the mean length")
    t0, t1 = (0, t_len) if t_range is None else t_range
    if not (0 <= t0 < t1 <= t_len):
        raise ConfigError(f"empty or out-of-bounds plot range ({t0}, {t1}) "
                          f"for {t_len} timesteps")

    sl = slice(t0, t1)
    series = [lower[sl], upper[sl]]
    natives = {k: np.asarray(v, dtype=float) for k, v in sorted(natives.items())}
    for v in natives.values():
        if v.size != t_len:
            raise DataError("plot: native trajectory length mismatch")
        series.append(v[sl])
    if test_values is not None:
        test_values = np.asarray(test_values, dtype=float)
        if test_values.size != t_len:
            raise DataError("plot: test trajectory length mismatch")
        series.append(test_values[sl])
    y_min = min(float(s.min()) for s in series)
    y_max = max(float(s.max()) for s in series)
    pad = 0.05 * (y_max - y_min) or 1.0
    y_min -= pad
    y_max += pad

    plot_w = width - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = height - MARGIN_TOP - MARGIN_BOTTOM
    t_span = max(t1 - 1 - t0, 1)

    def x(t):
        return MARGIN_LEFT + (t - t0) / t_span * plot_w

    def y(v):
        return MARGIN_TOP + (y_max - v) / (y_max - y_min) * plot_h

    ts = np.arange(t0, t1)
    xs = [x(t) for t in ts]

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
    ]

    band = (_points(xs, [y(v) for v in upper[sl]]) + " "
            + _points(xs[::-1], [y(v) for v in lower[sl][::-1]]))
    parts.append(f'<polygon class="band" points="{band}" fill="{BAND_FILL}" '
                 f'fill-opacity="0.45" stroke="none"/>')

    for signer, values in natives.items():
        parts.append(f'<polyline class="native" data-signer="{signer}" '
                     f'points="{_points(xs, [y(v) for v in values[sl]])}" '
                     f'fill="none" stroke="{NATIVE_COLOR}" stroke-width="1"/>')

    parts.append(f'<polyline class="mean" '
                 f'points="{_points(xs, [y(v) for v in mean[sl]])}" '
                 f'fill="none" stroke="{MEAN_COLOR}" stroke-width="1.8"/>')

    if test_values is not None:
        parts.append(f'<polyline class="test" '
                     f'points="{_points(xs, [y(v) for v in test_values[sl]])}" '
                     f'fill="none" stroke="{TEST_COLOR}" stroke-width="1.6"/>')
        if outside is not None:
            outside = np.asarray(outside, dtype=bool)
            if outside.size != t_len:
                raise DataError("plot: outside mask length mismatch")
            t = t0
            while t < t1:
                if not outside[t]:
                    t += 1
                    continue
                start = t
                while t < t1 and outside[t]:
                    t += 1
                run_x = [x(i) for i in range(start, t)]
                run_y = [y(test_values[i]) for i in range(start, t)]
                if len(run_x) == 1:
                    parts.append(f'<circle class="outside" '
                                 f'cx="{_fmt(run_x[0])}" cy="{_fmt(run_y[0])}" '
                                 f'r="2.5" fill="{OUTSIDE_COLOR}"/>')
                else:
                    parts.append(f'<polyline class="outside" '
                                 f'points="{_points(run_x, run_y)}" fill="none" '
                                 f'stroke="{OUTSIDE_COLOR}" stroke-width="2.4"/>')

    x_axis_y = _fmt(MARGIN_TOP + plot_h)
    parts.append(f'<line class="axis" x1="{_fmt(MARGIN_LEFT)}" y1="{x_axis_y}" '
                 f'x2="{_fmt(MARGIN_LEFT + plot_w)}" y2="{x_axis_y}" '
                 f'stroke="#000000" stroke-width="1"/>')
    parts.append(f'<line class="axis" x1="{_fmt(MARGIN_LEFT)}" '
                 f'y1="{_fmt(MARGIN_TOP)}" x2="{_fmt(MARGIN_LEFT)}" '
                 f'y2="{x_axis_y}" stroke="#000000" stroke-width="1"/>')
    labels = [
        (MARGIN_LEFT, MARGIN_TOP + plot_h + 16.0, "start", str(t0)),
        (MARGIN_LEFT + plot_w, MARGIN_TOP + plot_h + 16.0, "end", str(t1 - 1)),
        (MARGIN_LEFT - 6.0, MARGIN_TOP + plot_h, "end", f"{y_min:.3g}"),
        (MARGIN_LEFT - 6.0, MARGIN_TOP + 4.0, "end", f"{y_max:.3g}"),
    ]
    for lx, ly, anchor, text in labels:
        parts.append(f'<text class="label" x="{_fmt(lx)}" y="{_fmt(ly)}" '
                     f'font-family="sans-serif" font-size="11" '
                     f'text-anchor="{anchor}">{text}</text>')
    if title:
        parts.append(f'<text class="title" x="{_fmt(width / 2)}" y="18" '
                     f'font-family="sans-serif" font-size="13" '
                     f'text-anchor="middle">{title}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def save_svg(svg: str, path) -> None:
    write_text_atomic(path, svg)
