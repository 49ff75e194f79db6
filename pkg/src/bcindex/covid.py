"""HP-filter smoothing of a daily series and lead-k correlation with the index.

The smoothing step removes strong day-of-week calendar effects from recorded
epidemic series before correlating them with the activity index; the lead
re-times a lagging proxy (deaths stand in for infections roughly 20 days
earlier).  Order of operations: lead first, then smooth.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded

from .errors import ValidationError
from .vintage import Path


@dataclass
class DailySeries:
    """Contiguous daily values; gaps in the raw input are forward-filled and flagged."""

    start: dt.date
    values: np.ndarray
    filled: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or len(self.values) == 0:
            raise ValidationError("daily series must be a non-empty 1-d sequence")
        if self.filled is None:
            self.filled = np.zeros(len(self.values), dtype=bool)

    @classmethod
    def from_pairs(cls, pairs: list[tuple[dt.date, float]]) -> "DailySeries":
        if not pairs:
            raise ValidationError("empty daily series")
        ordered = sorted(pairs, key=lambda r: r[0])
        for a, b in zip(ordered, ordered[1:]):
            if a[0] == b[0]:
                raise ValidationError(f"duplicate date {a[0]} in daily series")
        start, end = ordered[0][0], ordered[-1][0]
        n = (end - start).days + 1
        values = np.empty(n)
        filled = np.ones(n, dtype=bool)
        for date, value in ordered:
            i = (date - start).days
            values[i] = value
            filled[i] = False
        last = values[0]
        for i in range(n):
            if filled[i]:
                values[i] = last
            else:
                last = values[i]
        return cls(start=start, values=values, filled=filled)

    @classmethod
    def from_path(cls, path: Path) -> "DailySeries":
        return cls(start=path.start, values=path.values.copy())

    @property
    def end(self) -> dt.date:
        return self.start + dt.timedelta(days=len(self.values) - 1)

    def dates(self) -> list[dt.date]:
        return [self.start + dt.timedelta(days=i) for i in range(len(self.values))]


def hp_trend(y: np.ndarray, lam: float) -> np.ndarray:
    """Trend minimizing sum (y-tau)^2 + lam * sum (second differences of tau)^2.

    Solved through the equivalent pentadiagonal SPD system
    ((1/lam) I + D D') w = D y, tau = y - D' w, which stays accurate for
    lam as large as 1e12 where the (I + lam D'D) form loses digits.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < 3:
        raise ValidationError(f"HP filter needs at least 3 points, got {n}")
    if not lam > 0:
        raise ValidationError(f"HP lambda must be positive, got {lam}")
    k = n - 2
    # D D' for the (n-2) x n second-difference operator is exactly Toeplitz
    # pentadiagonal [1, -4, 6, -4, 1]; upper band storage for solveh_banded.
    ab = np.zeros((3, k))
    ab[2, :] = 6.0 + 1.0 / lam
    ab[1, 1:] = -4.0
    ab[0, 2:] = 1.0
    rhs = y[:-2] - 2.0 * y[1:-1] + y[2:]
    try:
        w = solveh_banded(ab, rhs)
    except np.linalg.LinAlgError as e:  # pragma: no cover - SPD by construction
        raise ValidationError(f"HP system could not be solved: {e}") from e
    trend = y.copy()
    trend[:-2] += -w
    trend[1:-1] += 2.0 * w
    trend[2:] += -w
    return trend


def hp_filter(series: DailySeries, lam: float) -> tuple[DailySeries, DailySeries]:
    """Split a daily series into (trend, cycle) with smoothing weight ``lam``."""
    trend = hp_trend(series.values, lam)
    return (
        DailySeries(start=series.start, values=trend),
        DailySeries(start=series.start, values=series.values - trend),
    )


def lead(series: DailySeries, k: int) -> DailySeries:
    """Re-time the series so day d carries the raw value from day d+k."""
    if k < 0:
        raise ValidationError(f"lead must be >= 0, got {k}")
    if k >= len(series.values):
        raise ValidationError(f"lead {k} not smaller than series length {len(series.values)}")
    if k == 0:
        return DailySeries(start=series.start, values=series.values.copy(),
                           filled=series.filled.copy())
    return DailySeries(start=series.start, values=series.values[k:].copy(),
                       filled=series.filled[k:].copy())


def _overlap(a: DailySeries, b: DailySeries):
    lo = max(a.start, b.start)
    hi = min(a.end, b.end)
    n = (hi - lo).days + 1
    if n < 3:
        raise ValidationError(
            f"series overlap on {max(n, 0)} day(s); need at least 3"
        )
    ai = (lo - a.start).days
    bi = (lo - b.start).days
    return lo, a.values[ai: ai + n], b.values[bi: bi + n]


def correlate(a: DailySeries, b: DailySeries) -> float:
    """Pearson correlation over the two series' common dates."""
    _, va, vb = _overlap(a, b)
    sa, sb = va.std(), vb.std()
    if sa == 0.0 or sb == 0.0:
        raise ValidationError("correlation undefined: a series has zero variance on the overlap")
    return float(np.corrcoef(va, vb)[0, 1])


@dataclass
class PipelineResult:
    start: dt.date
    index_values: np.ndarray
    smoothed_values: np.ndarray
    correlation: float
    lead_days: int
    hp_lambda: float

    def dates(self) -> list[dt.date]:
        return [self.start + dt.timedelta(days=i) for i in range(len(self.index_values))]


def covid_pipeline(index_path: Path, deaths: DailySeries, k: int = 20,
                   lam: float = 1.0e7) -> PipelineResult:
    """Lead the deaths series by ``k`` days, HP-smooth it, align, correlate."""
    led = lead(deaths, k)
    smoothed, _ = hp_filter(led, lam)
    idx = DailySeries.from_path(index_path)
    lo, vi, vs = _overlap(idx, smoothed)
    si, ss = vi.std(), vs.std()
    if si == 0.0 or ss == 0.0:
        raise ValidationError("correlation undefined: a series has zero variance on the overlap")
    corr = float(np.corrcoef(vi, vs)[0, 1])
    return PipelineResult(
        start=lo,
        index_values=vi,
        smoothed_values=vs,
        correlation=corr,
        lead_days=k,
        hp_lambda=lam,
    )
