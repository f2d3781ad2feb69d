"""Static reporting: regret charts as SVG and a summary table as CSV.

Charts are rendered directly as SVG text with a fixed 960x540 viewport,
linear axes, and colors assigned by series order, so identical inputs
produce byte-identical files.
"""

import csv
import math

VIEW_W = 960
VIEW_H = 540
MARGIN_LEFT = 70
MARGIN_RIGHT = 190
MARGIN_TOP = 46
MARGIN_BOTTOM = 56
PLOT_W = VIEW_W - MARGIN_LEFT - MARGIN_RIGHT
PLOT_H = VIEW_H - MARGIN_TOP - MARGIN_BOTTOM

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)

SUMMARY_COLUMNS = ("policy", "exploration", "final_cum_regret", "final_cum_reward")


def _fmt(v):
    return f"{v:.2f}"


def _nice_step(span, target_ticks=5):
    """A 1/2/2.5/5 x 10^k step giving roughly the target tick count."""
    if span <= 0:
        return 1.0
    raw = span / target_ticks
    power = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if power * mult >= raw:
            return power * mult
    return power * 10.0


def _ticks(vmax, target_ticks=5):
    step = _nice_step(vmax, target_ticks)
    n = int(math.floor(vmax / step + 1e-9))
    return [step * i for i in range(n + 1)], step


def _tick_label(v):
    return f"{v:g}"


class _SvgChart:
    """Accumulates SVG elements for one fixed-size line chart."""

    def __init__(self, title, x_label, y_label, x_max, y_max):
        self.parts = []
        self.x_max = max(float(x_max), 1.0)
        self.y_max = max(float(y_max), 1e-9)
        self.parts.append(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{VIEW_W}" '
            f'height="{VIEW_H}" viewBox="0 0 {VIEW_W} {VIEW_H}">'
        )
        self.parts.append(
            f'<rect x="0" y="0" width="{VIEW_W}" height="{VIEW_H}" fill="#ffffff"/>'
        )
        self.parts.append(
            f'<text x="{VIEW_W // 2}" y="26" text-anchor="middle" '
            f'font-family="sans-serif" font-size="17">{title}</text>'
        )
        self._axes(x_label, y_label)
        self._legend_row = 0

    def _x_px(self, x):
        return MARGIN_LEFT + (x / self.x_max) * PLOT_W

    def _y_px(self, y):
        return MARGIN_TOP + PLOT_H - (y / self.y_max) * PLOT_H

    def _axes(self, x_label, y_label):
        x0, y0 = MARGIN_LEFT, MARGIN_TOP
        x1, y1 = MARGIN_LEFT + PLOT_W, MARGIN_TOP + PLOT_H
        self.parts.append(
            f'<rect x="{x0}" y="{y0}" width="{PLOT_W}" height="{PLOT_H}" '
            f'fill="none" stroke="#333333" stroke-width="1"/>'
        )
        for v in _ticks(self.x_max)[0]:
            px = self._x_px(v)
            self.parts.append(
                f'<line x1="{_fmt(px)}" y1="{y1}" x2="{_fmt(px)}" y2="{y1 + 5}" '
                f'stroke="#333333" stroke-width="1"/>'
            )
            self.parts.append(
                f'<text x="{_fmt(px)}" y="{y1 + 20}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="12">{_tick_label(v)}</text>'
            )
        for v in _ticks(self.y_max)[0]:
            py = self._y_px(v)
            self.parts.append(
                f'<line x1="{x0 - 5}" y1="{_fmt(py)}" x2="{x0}" y2="{_fmt(py)}" '
                f'stroke="#333333" stroke-width="1"/>'
            )
            self.parts.append(
                f'<line x1="{x0}" y1="{_fmt(py)}" x2="{x1}" y2="{_fmt(py)}" '
                f'stroke="#dddddd" stroke-width="1"/>'
            )
            self.parts.append(
                f'<text x="{x0 - 9}" y="{_fmt(py + 4)}" text-anchor="end" '
                f'font-family="sans-serif" font-size="12">{_tick_label(v)}</text>'
            )
        self.parts.append(
            f'<text x="{MARGIN_LEFT + PLOT_W // 2}" y="{VIEW_H - 14}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="14">'
            f'{x_label}</text>'
        )
        mid_y = MARGIN_TOP + PLOT_H // 2
        self.parts.append(
            f'<text x="20" y="{mid_y}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14" '
            f'transform="rotate(-90 20 {mid_y})">{y_label}</text>'
        )

    def _points(self, values):
        coords = []
        for i, v in enumerate(values):
            coords.append(f"{_fmt(self._x_px(i + 1))},{_fmt(self._y_px(v))}")
        return " ".join(coords)

    def add_band(self, lower, upper, color):
        forward = [
            f"{_fmt(self._x_px(i + 1))},{_fmt(self._y_px(v))}"
            for i, v in enumerate(upper)
        ]
        backward = [
            f"{_fmt(self._x_px(i + 1))},{_fmt(self._y_px(v))}"
            for i, v in reversed(list(enumerate(lower)))
        ]
        self.parts.append(
            f'<polygon points="{" ".join(forward + backward)}" fill="{color}" '
            f'fill-opacity="0.18" stroke="none"/>'
        )

    def add_line(self, values, color, label):
        self.parts.append(
            f'<polyline points="{self._points(values)}" fill="none" '
            f'stroke="{color}" stroke-width="1.8"/>'
        )
        ly = 64 + 24 * self._legend_row
        lx = MARGIN_LEFT + PLOT_W + 14
        self.parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 26}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="3"/>'
        )
        self.parts.append(
            f'<text x="{lx + 32}" y="{ly}" font-family="sans-serif" '
            f'font-size="13">{label}</text>'
        )
        self._legend_row += 1

    def render(self):
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def render_regret_chart(path, series, title, with_bands=False,
                        x_label="step", y_label="cumulative regret"):
    """Write one SVG with a median polyline per series.

    ``series`` is an ordered list of (label, QuantileBand); when
    ``with_bands`` is set each series also gets a shaded p25-p75 region.
    Colors follow series order.
    """
    if not series:
        raise ValueError("need at least one series to render")
    horizons = {band.horizon for _, band in series}
    if len(horizons) != 1:
        raise ValueError(f"series disagree on horizon: {sorted(horizons)}")
    x_max = horizons.pop()
    peak = max(
        (band.p75 if with_bands else band.median).max() for _, band in series
    )
    chart = _SvgChart(title, x_label, y_label, x_max, peak)
    if with_bands:
        for i, (_, band) in enumerate(series):
            chart.add_band(band.p25, band.p75, PALETTE[i % len(PALETTE)])
    for i, (label, band) in enumerate(series):
        chart.add_line(band.median, PALETTE[i % len(PALETTE)], label)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(chart.render())


def write_summary(path, rows):
    """Summary CSV: per-policy selected exploration and final medians.

    Each row is (policy, exploration or None, final_cum_regret,
    final_cum_reward); regret values should be taken from the last row
    of the policy's band so the files stay mutually consistent.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for policy, exploration, regret, reward in rows:
            writer.writerow([
                policy,
                "" if exploration is None else f"{float(exploration):g}",
                repr(float(regret)),
                repr(float(reward)),
            ])


def read_summary(path):
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SUMMARY_COLUMNS:
            raise ValueError(f"{path}: unexpected summary columns")
        for rec in reader:
            rows.append((
                rec["policy"],
                None if rec["exploration"] == "" else float(rec["exploration"]),
                float(rec["final_cum_regret"]),
                float(rec["final_cum_reward"]),
            ))
    return rows
