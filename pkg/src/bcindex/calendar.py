"""Daily grid arithmetic and frequency mapping.

The model lives on a gapless daily grid (weekends and holidays are ordinary
days that simply carry no observations).  This module answers the two
questions everything else needs: which week/month/quarter does a given day
belong to, and how many days does that period contain.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from enum import Enum

from .errors import GridRangeError, ValidationError

SATURDAY = 5  # datetime.date.weekday() convention, Monday == 0

_QUARTER_START_MONTH = {1: 1, 2: 1, 3: 1, 4: 4, 5: 4, 6: 4, 7: 7, 8: 7, 9: 7, 10: 10, 11: 10, 12: 10}


class Frequency(str, Enum):
    DAILY = "daily"
    WEEKLY = "weekly"
    MONTHLY = "monthly"
    QUARTERLY = "quarterly"


@dataclass(frozen=True, order=True)
class Day:
    """A calendar date plus its 0-based position on the grid."""

    date: dt.date
    index: int


@dataclass(frozen=True)
class Period:
    """One week/month/quarter (or single day) clipped to the grid.

    ``complete`` is True when the natural calendar boundaries of the period
    fall inside the grid; only complete periods can carry observations.
    """

    frequency: Frequency
    start: Day
    end: Day
    complete: bool = True

    @property
    def n_days(self) -> int:
        return self.end.index - self.start.index + 1

    def __post_init__(self):
        if self.end.index < self.start.index:
            raise ValidationError(f"period end {self.end.date} precedes start {self.start.date}")


def _month_start(d: dt.date) -> dt.date:
    return d.replace(day=1)


def month_end(d: dt.date) -> dt.date:
    nxt = dt.date(d.year + (d.month == 12), d.month % 12 + 1, 1)
    return nxt - dt.timedelta(days=1)


def _quarter_start(d: dt.date) -> dt.date:
    return dt.date(d.year, _QUARTER_START_MONTH[d.month], 1)


def _quarter_end(d: dt.date) -> dt.date:
    start = _quarter_start(d)
    return month_end(dt.date(start.year, start.month + 2, 1))


def natural_bounds(date: dt.date, frequency: Frequency, week_end: int = SATURDAY) -> tuple[dt.date, dt.date]:
    """Calendar boundaries of the period containing ``date``, ignoring the grid."""
    if frequency == Frequency.DAILY:
        return date, date
    if frequency == Frequency.WEEKLY:
        ahead = (week_end - date.weekday()) % 7
        end = date + dt.timedelta(days=ahead)
        return end - dt.timedelta(days=6), end
    if frequency == Frequency.MONTHLY:
        return _month_start(date), month_end(date)
    if frequency == Frequency.QUARTERLY:
        return _quarter_start(date), _quarter_end(date)
    raise ValidationError(f"unknown frequency {frequency!r}")


def previous_period_end(period_end: dt.date, frequency: Frequency) -> dt.date:
    """End date of the period immediately before the one ending at ``period_end``."""
    start, _ = natural_bounds(period_end, frequency)
    return start - dt.timedelta(days=1)


@dataclass(frozen=True)
class DayGrid:
    """Gapless daily grid between two dates, inclusive.

    ``week_end`` sets the weekday on which weekly periods end (default
    Saturday, the US initial-claims reference-week convention).
    """

    start: dt.date
    end: dt.date
    week_end: int = SATURDAY

    def __post_init__(self):
        if self.end < self.start:
            raise ValidationError(f"grid end {self.end} precedes start {self.start}")
        if not 0 <= self.week_end <= 6:
            raise ValidationError(f"week_end must be a weekday number in 0..6, got {self.week_end}")

    @property
    def n_days(self) -> int:
        return (self.end - self.start).days + 1

    def __contains__(self, date: dt.date) -> bool:
        return self.start <= date <= self.end

    def day(self, date: dt.date) -> Day:
        if date not in self:
            raise GridRangeError(f"{date} outside grid [{self.start}, {self.end}]")
        return Day(date, (date - self.start).days)

    def day_at(self, index: int) -> Day:
        if not 0 <= index < self.n_days:
            raise GridRangeError(f"index {index} outside grid of {self.n_days} days")
        return Day(self.start + dt.timedelta(days=index), index)

    def enclosing_period(self, day: Day | dt.date, frequency: Frequency) -> Period:
        """The period of the given frequency containing ``day``, clipped to the grid.

        Periods of one frequency partition the grid; a period whose natural
        boundaries stick out of the grid is clipped and marked incomplete.
        """
        date = day.date if isinstance(day, Day) else day
        if date not in self:
            raise GridRangeError(f"{date} outside grid [{self.start}, {self.end}]")
        lo, hi = natural_bounds(date, frequency, self.week_end)
        complete = lo >= self.start and hi <= self.end
        return Period(
            frequency=frequency,
            start=self.day(max(lo, self.start)),
            end=self.day(min(hi, self.end)),
            complete=complete,
        )

    def period_days(self, period: Period) -> list[Day]:
        return [self.day_at(i) for i in range(period.start.index, period.end.index + 1)]

    def periods(self, frequency: Frequency) -> list[Period]:
        """All periods of one frequency, in order; together they cover every grid day."""
        out = []
        cursor = self.start
        while cursor <= self.end:
            p = self.enclosing_period(cursor, frequency)
            out.append(p)
            cursor = p.end.date + dt.timedelta(days=1)
        return out

    def complete_periods(self, frequency: Frequency) -> list[Period]:
        return [p for p in self.periods(frequency) if p.complete]
