"""Binned per-camera series of topic probabilities and label weights.

Bins are half-open ``[start, start + width)`` and aligned to UTC midnight
(counted from the Unix epoch). Two kinds of series share one container:

* topic series average ``theta[i, z]`` over the images in a bin; a bin with
  no images is a gap.
* label series average one column of the image-label matrix; images lacking
  the label count as 0, and only a bin with no images at all is a gap.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import plotting
from .corpus import RowMeta, format_timestamp, parse_timestamp
from .errors import IncompatibleBinWidth, LengthMismatch, UserError
from .weighting import ImageLabelMatrix, label_column_series

DEFAULT_BIN_WIDTH = timedelta(minutes=15)
EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
DAY = timedelta(days=1)


@dataclass(frozen=True)
class Bin:
    start: datetime
    mean: float | None
    count: int

    @property
    def is_gap(self) -> bool:
        return self.count == 0


@dataclass(frozen=True)
class TopicSeries:
    """Contiguous bins for one camera and one key (a topic or a label)."""

    camera: str
    key: str
    bin_width: timedelta
    bins: tuple[Bin, ...] = ()

    def populated(self) -> list[Bin]:
        return [b for b in self.bins if b.count > 0]


def topic_key(z: int) -> str:
    """Display key for 0-based topic ``z``; topics are numbered from 1."""
    return f"topic {z + 1}"


def _check_width(width: timedelta) -> int:
    seconds = width.total_seconds()
    if seconds <= 0 or seconds != int(seconds):
        raise UserError(f"bin width must be a positive whole number of seconds, got {width}")
    return int(seconds)


def bin_start(ts: datetime, width: timedelta) -> datetime:
    seconds = _check_width(width)
    offset = int((ts - EPOCH).total_seconds())
    return EPOCH + timedelta(seconds=offset - offset % seconds)


def _bin_points(camera: str, key: str, points: Iterable[tuple[datetime, float]], width: timedelta) -> TopicSeries:
    groups: dict[datetime, list[float]] = defaultdict(list)
    for ts, value in points:
        groups[bin_start(ts, width)].append(value)
    if not groups:
        return TopicSeries(camera, key, width)
    first, last = min(groups), max(groups)
    bins = []
    start = first
    while start <= last:
        values = groups.get(start)
        if values:
            bins.append(Bin(start, math.fsum(values) / len(values), len(values)))
        else:
            bins.append(Bin(start, None, 0))
        start += width
    return TopicSeries(camera, key, width, tuple(bins))


def topic_series(
    theta: np.ndarray, row_meta: Sequence[RowMeta], z: int, bin_width: timedelta = DEFAULT_BIN_WIDTH
) -> dict[str, TopicSeries]:
    """Per camera, the binned mean of ``theta[:, z]``."""
    theta = np.asarray(theta)
    if theta.shape[0] != len(row_meta):
        raise LengthMismatch(f"{theta.shape[0]} theta rows but {len(row_meta)} metadata rows")
    if not 0 <= z < theta.shape[1]:
        raise UserError(f"topic {z} outside [0, {theta.shape[1]})")
    _check_width(bin_width)
    per_camera: dict[str, list] = defaultdict(list)
    for row, meta in zip(theta[:, z], row_meta):
        per_camera[meta.camera].append((meta.timestamp, float(row)))
    return {cam: _bin_points(cam, topic_key(z), pts, bin_width) for cam, pts in sorted(per_camera.items())}


def label_series(matrix: ImageLabelMatrix, j: int, bin_width: timedelta = DEFAULT_BIN_WIDTH) -> dict[str, TopicSeries]:
    """Per camera, the binned mean of column ``j``, absent labels counted as 0."""
    columns = label_column_series(matrix, j)
    key = str(matrix.vocab.words[j])
    _check_width(bin_width)
    return {cam: _bin_points(cam, key, pts, bin_width) for cam, pts in columns.items()}


# weekly overlays

def _iso_week(d: date) -> str:
    year, week, _ = d.isocalendar()
    return f"{year}-W{week:02d}"


def week_monday(week: str) -> date:
    year, _, number = week.partition("-W")
    return date.fromisocalendar(int(year), int(number), 1)


@dataclass(frozen=True)
class WeeklyOverlay:
    """Bins re-indexed by ISO week and position within the week.

    ``means[week]`` and ``counts[week]`` hold one entry per slot; slot ``s``
    is weekday ``s // slots_per_day`` (Monday = 0) at time of day
    ``(s % slots_per_day) * bin_width``.
    """

    camera: str
    key: str
    bin_width: timedelta
    weeks: tuple[str, ...]
    means: dict[str, tuple[float | None, ...]]
    counts: dict[str, tuple[int, ...]]
    highlight_weeks: tuple[str, ...] = field(default_factory=tuple)

    @property
    def slots_per_day(self) -> int:
        return DAY // self.bin_width

    @property
    def slots_per_week(self) -> int:
        return 7 * self.slots_per_day

    def slot_of(self, ts: datetime) -> tuple[str, int]:
        return slot_position(ts, self.bin_width)

    def slot_start(self, week: str, slot: int) -> datetime:
        return slot_time(week, slot, self.bin_width)


def slot_position(ts: datetime, bin_width: timedelta) -> tuple[str, int]:
    """``(iso_week, slot)`` of the bin containing ``ts``."""
    start = bin_start(ts, bin_width)
    per_day = DAY // bin_width
    midnight = datetime(start.year, start.month, start.day, tzinfo=timezone.utc)
    return _iso_week(start.date()), start.weekday() * per_day + (start - midnight) // bin_width


def slot_time(week: str, slot: int, bin_width: timedelta) -> datetime:
    """Inverse of :func:`slot_position`."""
    monday = week_monday(week)
    return datetime(monday.year, monday.month, monday.day, tzinfo=timezone.utc) + slot * bin_width


def weekly_overlay(series: TopicSeries, highlight: Sequence[date] = ()) -> WeeklyOverlay:
    width = series.bin_width
    seconds = _check_width(width)
    if 86400 % seconds:
        raise IncompatibleBinWidth(f"bin width {width} does not divide a day")
    per_week = 7 * (86400 // seconds)
    means: dict[str, list] = {}
    counts: dict[str, list] = {}
    for b in series.populated():
        week, slot = slot_position(b.start, width)
        if week not in means:
            means[week] = [None] * per_week
            counts[week] = [0] * per_week
        means[week][slot] = b.mean
        counts[week][slot] = b.count
    weeks = tuple(sorted(means))
    flagged = tuple(sorted({_iso_week(d) for d in highlight}))
    return WeeklyOverlay(
        camera=series.camera,
        key=series.key,
        bin_width=width,
        weeks=weeks,
        means={w: tuple(means[w]) for w in weeks},
        counts={w: tuple(counts[w]) for w in weeks},
        highlight_weeks=flagged,
    )


def flatten(overlay: WeeklyOverlay) -> list[Bin]:
    """Populated slots back as time-ordered bins."""
    out = []
    for week in overlay.weeks:
        for slot, (mean, count) in enumerate(zip(overlay.means[week], overlay.counts[week])):
            if count > 0:
                out.append(Bin(overlay.slot_start(week, slot), mean, count))
    return sorted(out, key=lambda b: b.start)


# export

SERIES_HEADER = ["camera", "key", "bin_start", "mean", "count"]
OVERLAY_HEADER = ["camera", "key", "week", "weekday", "slot", "mean", "count", "highlight"]


def _fmt(mean: float | None) -> str:
    return "" if mean is None else repr(float(mean))


def write_series_csv(series: Iterable[TopicSeries], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SERIES_HEADER)
        for s in series:
            for b in s.bins:
                writer.writerow([s.camera, s.key, format_timestamp(b.start), _fmt(b.mean), b.count])


def read_series_csv(path, bin_width: timedelta | None = None) -> list[TopicSeries]:
    """Re-import a series CSV. Without ``bin_width`` it is inferred from bin spacing."""
    grouped: dict[tuple[str, str], list[Bin]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SERIES_HEADER:
            raise UserError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            mean = float(row["mean"]) if row["mean"] else None
            b = Bin(parse_timestamp(row["bin_start"]), mean, int(row["count"]))
            grouped.setdefault((row["camera"], row["key"]), []).append(b)
    out = []
    for (camera, key), bins in grouped.items():
        width = bin_width
        if width is None:
            gaps = [b2.start - b1.start for b1, b2 in zip(bins, bins[1:])]
            width = min(gaps) if gaps else DEFAULT_BIN_WIDTH
        out.append(TopicSeries(camera, key, width, tuple(bins)))
    return out


def write_overlay_csv(overlays: Iterable[WeeklyOverlay], path) -> None:
    """Every slot of every week with data; weekday is ISO (Monday = 1), slot counts within the day."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(OVERLAY_HEADER)
        for ov in overlays:
            per_day = ov.slots_per_day
            for week in ov.weeks:
                flag = int(week in ov.highlight_weeks)
                for slot, (mean, count) in enumerate(zip(ov.means[week], ov.counts[week])):
                    weekday, slot_of_day = divmod(slot, per_day)
                    writer.writerow([ov.camera, ov.key, week, weekday + 1, slot_of_day, _fmt(mean), count, flag])


def export(obj, path, format: str = "csv", **svg_options) -> Path:
    """Write series or overlays (one object or a list of one kind) as CSV or SVG."""
    items = list(obj) if isinstance(obj, (list, tuple)) else [obj]
    path = Path(path)
    overlays = bool(items) and isinstance(items[0], WeeklyOverlay)
    if format == "csv":
        (write_overlay_csv if overlays else write_series_csv)(items, path)
    elif format in ("svg", "svg-plot"):
        text = plotting.overlay_svg(items, **svg_options) if overlays else plotting.series_svg(items, **svg_options)
        path.write_text(text, encoding="utf-8")
    else:
        raise UserError(f"unknown export format {format!r}")
    return path
