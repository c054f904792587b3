"""Self-contained SVG line charts for binned series and weekly overlays.

Output is plain text with fixed number formatting, so identical input gives
identical bytes. Lines break at empty bins: every unbroken run of populated
bins becomes its own ``<polyline>``.
"""

from __future__ import annotations

from datetime import date, timedelta, timezone
from xml.sax.saxutils import escape

WIDTH = 960
PANEL_HEIGHT = 220
MARGIN_LEFT = 60
MARGIN_RIGHT = 20
MARGIN_TOP = 30
MARGIN_BOTTOM = 40
GREY = "#c8c8c8"
PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
WEEKDAYS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")


def _monday(week: str) -> str:
    year, _, number = week.partition("-W")
    return date.fromisocalendar(int(year), int(number), 1).isoformat()


def _runs(values):
    """Split ``[(x, y or None), ...]`` into runs without ``None``."""
    run = []
    for x, y in values:
        if y is None:
            if run:
                yield run
            run = []
        else:
            run.append((x, y))
    if run:
        yield run


class _Canvas:
    def __init__(self, n_panels: int, title: str | None):
        self.height = MARGIN_TOP + n_panels * (PANEL_HEIGHT + MARGIN_BOTTOM) + 10
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{self.height}" '
            f'viewBox="0 0 {WIDTH} {self.height}" font-family="sans-serif" font-size="11">',
            f'<rect x="0" y="0" width="{WIDTH}" height="{self.height}" fill="white"/>',
        ]
        if title:
            self.parts.append(f'<text x="{WIDTH / 2:.2f}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>')

    def panel(self, index: int, label: str, y_max: float, x_ticks):
        top = MARGIN_TOP + index * (PANEL_HEIGHT + MARGIN_BOTTOM)
        left, right = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
        bottom = top + PANEL_HEIGHT
        p = self.parts
        p.append(f'<g class="panel" data-label="{escape(label, {chr(34): "&quot;"})}">')
        p.append(f'<text x="{left}" y="{top - 6}">{escape(label)}</text>')
        p.append(f'<rect x="{left}" y="{top}" width="{right - left}" height="{PANEL_HEIGHT}" fill="none" stroke="#444"/>')
        for frac in (0.0, 0.5, 1.0):
            y = bottom - frac * PANEL_HEIGHT
            p.append(f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end">{frac * y_max:.3g}</text>')
        for x, text in x_ticks:
            p.append(f'<line x1="{x:.2f}" y1="{bottom}" x2="{x:.2f}" y2="{bottom + 4}" stroke="#444"/>')
            p.append(f'<text x="{x:.2f}" y="{bottom + 16}" text-anchor="middle">{escape(text)}</text>')
        return top, bottom

    def polyline(self, points, color: str, width: float = 1.2, css: str = "line"):
        coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
        self.parts.append(
            f'<polyline class="{css}" points="{coords}" fill="none" stroke="{color}" stroke-width="{width}"/>'
        )

    def close_panel(self):
        self.parts.append("</g>")

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _y_scale(values) -> float:
    top = max((v for v in values if v is not None), default=0.0)
    return top if top > 1.0 else 1.0


def series_svg(series, *, utc_offset_hours: float = 0.0, title: str | None = None) -> str:
    """One panel per series; x is time, shifted by ``utc_offset_hours`` for the tick labels only."""
    canvas = _Canvas(max(len(series), 1), title)
    shift = timedelta(hours=utc_offset_hours)
    tz = timezone(shift) if utc_offset_hours else timezone.utc
    for k, s in enumerate(series):
        bins = s.bins
        y_max = _y_scale([b.mean for b in bins])
        left, right = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
        if bins:
            t0, t1 = bins[0].start, bins[-1].start
            span = max((t1 - t0).total_seconds(), 1.0)
        else:
            t0, span = None, 1.0

        def x_of(ts):
            return left + (ts - t0).total_seconds() / span * (right - left)

        ticks = []
        if bins:
            for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
                ts = t0 + timedelta(seconds=frac * span)
                ticks.append((left + frac * (right - left), ts.astimezone(tz).strftime("%Y-%m-%d %H:%M")))
        top, bottom = canvas.panel(k, f"{s.camera} / {s.key}", y_max, ticks)
        for run in _runs((b.start, b.mean) for b in bins):
            pts = [(x_of(ts), bottom - v / y_max * PANEL_HEIGHT) for ts, v in run]
            if len(pts) == 1:
                pts.append(pts[0])
            canvas.polyline(pts, PALETTE[1])
        canvas.close_panel()
    return canvas.render()


def overlay_svg(overlays, *, title: str | None = None) -> str:
    """One panel per camera: grey lines for every week, colored lines for highlighted weeks on top."""
    canvas = _Canvas(max(len(overlays), 1), title)
    for k, ov in enumerate(overlays):
        n_slots = ov.slots_per_week
        per_day = ov.slots_per_day
        left, right = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
        y_max = _y_scale([m for w in ov.weeks for m in ov.means[w]])
        step = (right - left) / max(n_slots - 1, 1)
        ticks = [(left + (d * per_day + per_day / 2) * step, WEEKDAYS[d]) for d in range(7)]
        top, bottom = canvas.panel(k, f"{ov.camera} / {ov.key}", y_max, ticks)
        ordered = [w for w in ov.weeks if w not in ov.highlight_weeks] + [w for w in ov.weeks if w in ov.highlight_weeks]
        color_no = 0
        for week in ordered:
            highlighted = week in ov.highlight_weeks
            color = PALETTE[color_no % len(PALETTE)] if highlighted else GREY
            for run in _runs(enumerate(ov.means[week])):
                pts = [(left + s * step, bottom - v / y_max * PANEL_HEIGHT) for s, v in run]
                if len(pts) == 1:
                    pts.append(pts[0])
                canvas.polyline(pts, color, 1.8 if highlighted else 1.0, "week highlight" if highlighted else "week")
            if highlighted:
                canvas.parts.append(
                    f'<text x="{right - 4}" y="{top + 14 + 14 * color_no}" text-anchor="end" fill="{color}">'
                    f"Week of {_monday(week)}</text>"
                )
                color_no += 1
        canvas.close_panel()
    return canvas.render()
