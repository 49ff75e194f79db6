"""Recession metrics over an index path: duration, depth, severity.

Peak months belong to the preceding expansion and trough months to the
recession, so an episode's day-set runs from the first day of the month
after the peak through the last day of the trough month, and its duration
is the number of those months.  Depth is the absolute minimum daily index
value over the day-set; severity is depth times duration.
"""

from __future__ import annotations

import datetime as dt
import warnings
from dataclasses import dataclass

import numpy as np

from .calendar import Day, month_end
from .errors import GridRangeError, ValidationError
from .vintage import Path


def _month_index(month: dt.date) -> int:
    return month.year * 12 + month.month


def duration_months(peak_month: dt.date, trough_month: dt.date) -> int:
    """Months strictly after the peak through the trough, inclusive."""
    if trough_month < peak_month:
        raise ValidationError(f"trough {trough_month} precedes peak {peak_month}")
    return _month_index(trough_month) - _month_index(peak_month)


@dataclass(frozen=True)
class RecessionEpisode:
    """One dated recession; months are first-of-month dates."""

    peak_month: dt.date
    trough_month: dt.date
    peak_announced: dt.date | None = None
    trough_announced: dt.date | None = None

    def __post_init__(self):
        if self.peak_month.day != 1 or self.trough_month.day != 1:
            raise ValidationError("peak/trough months must be first-of-month dates")
        if self.trough_month < self.peak_month:
            raise ValidationError(
                f"trough {self.trough_month} precedes peak {self.peak_month}"
            )

    @property
    def duration(self) -> int:
        return duration_months(self.peak_month, self.trough_month)

    @property
    def start_day(self) -> dt.date:
        """First day of the month after the peak."""
        m = self.peak_month
        return dt.date(m.year + (m.month == 12), m.month % 12 + 1, 1)

    @property
    def end_day(self) -> dt.date:
        """Last day of the trough month."""
        return month_end(self.trough_month)


@dataclass(frozen=True)
class RecessionTable:
    episodes: tuple[RecessionEpisode, ...]

    def __post_init__(self):
        for a, b in zip(self.episodes, self.episodes[1:]):
            if b.peak_month <= a.trough_month:
                raise ValidationError(
                    f"episodes overlap or are out of order near {a.trough_month}"
                )

    def __iter__(self):
        return iter(self.episodes)

    def __len__(self):
        return len(self.episodes)


def _ep(peak, trough, peak_ann=None, trough_ann=None):
    return RecessionEpisode(
        peak_month=dt.date(*peak, 1),
        trough_month=dt.date(*trough, 1),
        peak_announced=dt.date(*peak_ann) if peak_ann else None,
        trough_announced=dt.date(*trough_ann) if trough_ann else None,
    )


# NBER chronology, 1960 through the 2020 pandemic episode; announcement dates
# where the committee made one.
NBER_TABLE = RecessionTable(episodes=(
    _ep((1960, 4), (1961, 2)),
    _ep((1969, 12), (1970, 11)),
    _ep((1973, 11), (1975, 3)),
    _ep((1980, 1), (1980, 7), (1980, 6, 3), (1981, 7, 8)),
    _ep((1981, 7), (1982, 11), (1982, 1, 6), (1983, 7, 8)),
    _ep((1990, 7), (1991, 3), (1991, 4, 25), (1992, 12, 22)),
    _ep((2001, 3), (2001, 11), (2001, 11, 26), (2003, 7, 17)),
    _ep((2007, 12), (2009, 6), (2008, 12, 1), (2010, 9, 20)),
    _ep((2020, 2), (2020, 4), (2020, 6, 6), (2021, 7, 19)),
))


def _episode_slice(path: Path, episode: RecessionEpisode) -> np.ndarray:
    lo, hi = episode.start_day, episode.end_day
    if not path.covers(lo, hi):
        raise GridRangeError(
            f"path [{path.start}, {path.end}] does not cover episode days [{lo}, {hi}]"
        )
    i = (lo - path.start).days
    j = (hi - path.start).days
    return path.values[i: j + 1]


def depth(path: Path, episode: RecessionEpisode) -> float:
    """Absolute minimum daily index value over the episode day-set."""
    seg = _episode_slice(path, episode)
    m = float(seg.min())
    if m > 0:
        warnings.warn(
            f"index never went negative during {episode.peak_month}-{episode.trough_month}; "
            "depth uses |min| regardless", stacklevel=2,
        )
    return abs(m)


def severity(depth_value: float, duration: int) -> float:
    """Depth times duration."""
    if depth_value < 0 or duration < 0:
        raise ValidationError("depth and duration must be non-negative")
    return depth_value * duration


def trough_day(path: Path, episode: RecessionEpisode) -> Day:
    """First day attaining the episode minimum (ties break earliest)."""
    seg = _episode_slice(path, episode)
    offset = int(np.argmin(seg))
    date = episode.start_day + dt.timedelta(days=offset)
    return Day(date=date, index=(date - path.start).days)


def zero_crossing_recovery(path: Path, from_day: dt.date) -> Day | None:
    """First day at or after ``from_day`` where the index is >= 0, if any."""
    i = (from_day - path.start).days
    if not 0 <= i < len(path.values):
        raise GridRangeError(f"{from_day} outside path [{path.start}, {path.end}]")
    rel = np.nonzero(path.values[i:] >= 0.0)[0]
    if rel.size == 0:
        return None
    j = i + int(rel[0])
    return Day(date=path.start + dt.timedelta(days=j), index=j)


def parse_month(text: str) -> dt.date:
    """Accept 'YYYY-MM' or 'YYYY-MM-01'."""
    parts = text.strip().split("-")
    if len(parts) not in (2, 3):
        raise ValidationError(f"cannot parse month {text!r} (expected YYYY-MM)")
    try:
        return dt.date(int(parts[0]), int(parts[1]), 1)
    except ValueError as e:
        raise ValidationError(f"cannot parse month {text!r}: {e}") from None


def episode_report(path: Path, table: RecessionTable) -> list[dict]:
    """Table-shaped rows: dates, duration, and depth/severity where the path covers.

    Episodes outside the path's coverage keep their dates and duration but
    get empty depth/severity cells rather than failing the whole report.
    """
    rows = []
    for ep in table:
        row = {
            "peak": ep.peak_month.strftime("%Y-%m"),
            "trough": ep.trough_month.strftime("%Y-%m"),
            "peak_announced": ep.peak_announced.isoformat() if ep.peak_announced else "",
            "trough_announced": ep.trough_announced.isoformat() if ep.trough_announced else "",
            "duration": ep.duration,
        }
        try:
            d = depth(path, ep)
            row["depth"] = d
            row["severity"] = severity(d, ep.duration)
        except GridRangeError:
            row["depth"] = None
            row["severity"] = None
        rows.append(row)
    return rows
