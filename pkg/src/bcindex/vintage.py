"""Timestamped data vintages, per-vintage smoother replay, path and dot series.

A vintage is the complete snapshot of observations known at one pull
timestamp.  Replaying the smoother over an archive of vintages reconstructs
how beliefs about the whole daily history evolved release by release; the
dot series collects each path's final value (which is also the filtered
value, since smoothed and filtered moments coincide on the last day).
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path as FsPath

import numpy as np

from . import kalman
from .errors import BcIndexError, GridRangeError, ValidationError
from .estimate import EstimateOptions, estimate_mle
from .model import (DfmParams, DfmSpec, ObservationSet, Scaling,
                    build_state_space, transform_observations)

EVALUATION_MODES = ("final-full", "final-expanding", "pseudo-real-time")


@dataclass(frozen=True)
class ReleaseEvent:
    """One indicator release: when it arrived, which period it covers, its value."""

    timestamp: dt.datetime
    indicator: str
    period_end: dt.date
    value: float

    def __post_init__(self):
        if self.timestamp.date() < self.period_end:
            raise ValidationError(
                f"release at {self.timestamp} predates its reference period end {self.period_end}"
            )


@dataclass
class VintageDataset:
    """All observations known at one pull timestamp."""

    pull_timestamp: dt.datetime
    observations: ObservationSet

    def __post_init__(self):
        latest = self.observations.latest_period_end()
        if latest is not None and latest > self.pull_timestamp.date():
            raise ValidationError(
                f"vintage {self.pull_timestamp} contains an observation for {latest}, "
                "which ends after the pull date"
            )


@dataclass
class Path:
    """One vintage's extracted daily index with smoothed uncertainty bands."""

    pull_timestamp: dt.datetime | None
    start: dt.date
    values: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        if len(self.values) != len(self.stds):
            raise ValidationError("values and stds lengths differ")
        if len(self.values) == 0:
            raise ValidationError("empty path")
        if np.any(self.stds < 0):
            raise ValidationError("negative path std")

    @property
    def end(self) -> dt.date:
        return self.start + dt.timedelta(days=len(self.values) - 1)

    @property
    def last_value(self) -> float:
        return float(self.values[-1])

    def dates(self) -> list[dt.date]:
        return [self.start + dt.timedelta(days=i) for i in range(len(self.values))]

    def covers(self, lo: dt.date, hi: dt.date) -> bool:
        return self.start <= lo and hi <= self.end

    def value_at(self, date: dt.date) -> float:
        i = (date - self.start).days
        if not 0 <= i < len(self.values):
            raise GridRangeError(f"{date} outside path [{self.start}, {self.end}]")
        return float(self.values[i])


@dataclass
class DotSeries:
    """Final path value per replayed vintage, in pull order."""

    points: list[tuple[dt.datetime, float]]

    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.points])


def build_vintages_from_releases(events: list[ReleaseEvent]) -> list[VintageDataset]:
    """One cumulative vintage per distinct release timestamp.

    A later event for the same (indicator, period) overrides the earlier
    value within subsequent vintages: revision semantics.
    """
    ordered = sorted(events, key=lambda e: (e.timestamp, e.indicator, e.period_end))
    state: dict[str, dict[dt.date, float]] = {}
    out: list[VintageDataset] = []
    i = 0
    while i < len(ordered):
        stamp = ordered[i].timestamp
        while i < len(ordered) and ordered[i].timestamp == stamp:
            e = ordered[i]
            state.setdefault(e.indicator, {})[e.period_end] = e.value
            i += 1
        snapshot = ObservationSet(
            {ind: sorted(vals.items()) for ind, vals in state.items()}
        )
        out.append(VintageDataset(pull_timestamp=stamp, observations=snapshot))
    return out


def _parse_pull_timestamp(name: str) -> dt.datetime:
    try:
        return dt.datetime.fromisoformat(name)
    except ValueError:
        raise ValidationError(
            f"vintage directory {name!r} is not an ISO-8601 timestamp"
        ) from None


def _read_indicator_csv(path: FsPath, pull_date: dt.date) -> list[tuple[dt.date, float]]:
    rows: list[tuple[dt.date, float]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header[:2]] != ["period_end", "value"]:
            raise ValidationError(f"{path}: expected header 'period_end,value'")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                end = dt.date.fromisoformat(row[0].strip())
                raw = row[1].strip() if len(row) > 1 else ""
                value = float("nan") if raw == "" else float(raw)
            except (ValueError, IndexError) as e:
                raise ValidationError(f"{path}:{lineno}: malformed row {row!r} ({e})") from None
            if end > pull_date:
                raise ValidationError(
                    f"{path}:{lineno}: observation for {end} ends after the vintage pull date {pull_date}"
                )
            rows.append((end, value))
    return rows


def ingest_vintages(directory) -> list[VintageDataset]:
    """Load a ``vintages/<ISO-timestamp>/<indicator>.csv`` archive, pull order.

    Each CSV carries a ``period_end,value`` header; an empty value field is a
    declared-but-missing observation.
    """
    root = FsPath(directory)
    if not root.is_dir():
        raise ValidationError(f"{root} is not a directory")
    out = []
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        stamp = _parse_pull_timestamp(sub.name)
        series = {}
        for f in sorted(sub.glob("*.csv")):
            series[f.stem] = _read_indicator_csv(f, stamp.date())
        out.append(VintageDataset(pull_timestamp=stamp, observations=ObservationSet(series)))
    out.sort(key=lambda v: v.pull_timestamp)
    return out


def extract_path(spec: DfmSpec, params: DfmParams, vintage: VintageDataset,
                 scaling: Scaling | None = None, end: dt.date | None = None) -> Path:
    """Transform, standardize, filter and smooth one vintage into a Path.

    The path runs from the grid start through the latest observed period end
    (days beyond it carry only prior information and are omitted unless
    ``end`` overrides the cutoff).  With ``scaling=None`` the vintage is
    standardized with its own sample moments.
    """
    obs_t = transform_observations(spec, vintage.observations)
    if scaling is None:
        scaling = Scaling.fit(spec, obs_t)
    std_obs = scaling.apply(obs_t)

    if end is None:
        end = std_obs.latest_period_end()
        if end is None:
            end = min(max(vintage.pull_timestamp.date(), spec.grid_start), spec.grid_end)
    if not spec.grid_start <= end <= spec.grid_end:
        raise GridRangeError(f"path end {end} outside grid [{spec.grid_start}, {spec.grid_end}]")

    trimmed = replace(spec, grid_end=end)
    system = build_state_space(trimmed, params)
    fr = kalman.filter(system, std_obs)
    sm = kalman.smooth(system, fr)
    return Path(
        pull_timestamp=vintage.pull_timestamp,
        start=trimmed.grid_start,
        values=sm.index_values,
        stds=sm.index_std,
    )


@dataclass
class FixedParams:
    """Replay policy: one parameter set (and its scaling) for every vintage."""

    params: DfmParams
    scaling: Scaling


@dataclass
class ReestimatePerVintage:
    """Replay policy: re-run the MLE on each vintage, warm-starting from the last fit."""

    init: DfmParams | None = None
    options: EstimateOptions | None = None


def _extract_fixed(args):
    spec, params, scaling, vintage = args
    try:
        return extract_path(spec, params, vintage, scaling=scaling)
    except BcIndexError as e:
        raise type(e)(f"vintage {vintage.pull_timestamp.isoformat()}: {e}") from e


def replay(spec: DfmSpec, policy, vintages: list[VintageDataset],
           jobs: int = 1) -> tuple[list[Path], DotSeries]:
    """Extract one path per vintage in pull order and collect the dot series."""
    if not vintages:
        raise ValidationError("replay needs at least one vintage")
    ordered = sorted(vintages, key=lambda v: v.pull_timestamp)

    if isinstance(policy, FixedParams):
        work = [(spec, policy.params, policy.scaling, v) for v in ordered]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                paths = list(pool.map(_extract_fixed, work))
        else:
            paths = [_extract_fixed(w) for w in work]
    elif isinstance(policy, ReestimatePerVintage):
        paths = []
        init = policy.init
        for v in ordered:
            try:
                report = estimate_mle(spec, v.observations, init=init, options=policy.options)
                paths.append(extract_path(spec, report.params, v, scaling=report.scaling))
            except BcIndexError as e:
                raise type(e)(f"vintage {v.pull_timestamp.isoformat()}: {e}") from e
            init = report.params
    else:
        raise ValidationError(f"unknown params policy {policy!r}")

    dots = DotSeries([(p.pull_timestamp, p.last_value) for p in paths])
    return paths, dots


def evaluation_mode(mode: str, final_data: ObservationSet | None = None,
                    vintages: list[VintageDataset] | None = None,
                    cuts: list[dt.datetime] | None = None) -> list[VintageDataset]:
    """Build the per-date information sets each evaluation regime prescribes.

    "final-full" wraps the final revised dataset whole; "final-expanding"
    truncates it at each cut timestamp (taken from ``cuts`` or the vintage
    archive's pull stamps); "pseudo-real-time" replays the true vintages.
    Honest real-time evaluation beyond that needs outputs recorded live,
    which can only be ingested, not synthesized.
    """
    if mode not in EVALUATION_MODES:
        raise ValidationError(f"mode must be one of {EVALUATION_MODES}, got {mode!r}")
    if mode == "pseudo-real-time":
        if not vintages:
            raise ValidationError("pseudo-real-time mode needs a vintage archive")
        return sorted(vintages, key=lambda v: v.pull_timestamp)
    if final_data is None:
        raise ValidationError(f"{mode} mode needs the final revised dataset")
    if mode == "final-full":
        latest = final_data.latest_period_end() or dt.date.today()
        stamp = dt.datetime.combine(latest, dt.time())
        return [VintageDataset(pull_timestamp=stamp, observations=final_data)]
    stamps = cuts if cuts else [v.pull_timestamp for v in (vintages or [])]
    if not stamps:
        raise ValidationError("final-expanding mode needs cut timestamps or a vintage archive")
    out = []
    for stamp in sorted(stamps):
        out.append(VintageDataset(
            pull_timestamp=stamp,
            observations=final_data.truncated(stamp.date()),
        ))
    return out
