"""File formats: model config (INI), flat key-value params, and the CSV schemas.

Floats are written with ``repr`` so estimate -> replay hand-offs round-trip
exactly and repeated runs are byte-identical.
"""

from __future__ import annotations

import configparser
import csv
import datetime as dt
import math
from pathlib import Path as FsPath

import numpy as np

from .calendar import Frequency
from .errors import ConfigError, ValidationError
from .model import (DfmParams, DfmSpec, ErrorModel, IndicatorSpec, Kind,
                    ObservationSet, Scaling, Transform)
from .vintage import DotSeries, Path, ReleaseEvent

_WEEKDAYS = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"]


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# Model spec config (INI)


def read_spec(path) -> DfmSpec:
    """Parse a model config: one [model] section plus [indicator.<id>] sections."""
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read model config {path}")
    if "model" not in cp:
        raise ConfigError(f"{path}: missing [model] section")
    m = cp["model"]
    try:
        grid_start = dt.date.fromisoformat(m["grid_start"])
        grid_end = dt.date.fromisoformat(m["grid_end"])
    except (KeyError, ValueError) as e:
        raise ConfigError(f"{path}: bad or missing grid dates ({e})") from None
    week_end_name = m.get("week_end", "saturday").strip().lower()
    if week_end_name not in _WEEKDAYS:
        raise ConfigError(f"{path}: unknown week_end {week_end_name!r}")
    indicators = []
    for section in cp.sections():
        if not section.startswith("indicator."):
            continue
        ind_id = section.split(".", 1)[1]
        s = cp[section]
        try:
            indicators.append(IndicatorSpec(
                id=ind_id,
                frequency=Frequency(s["frequency"].strip().lower()),
                kind=Kind(s.get("kind", "flow").strip().lower()),
                transform=Transform(s.get("transform", "level").strip().lower()),
                measurement_error=ErrorModel(s.get("measurement_error", "iid").strip().lower()),
            ))
        except (KeyError, ValueError) as e:
            raise ConfigError(f"{path}: bad indicator section [{section}]: {e}") from None
    return DfmSpec(
        indicators=tuple(indicators),
        grid_start=grid_start,
        grid_end=grid_end,
        factor_ar_order=int(m.get("factor_ar_order", "1")),
        week_end=_WEEKDAYS.index(week_end_name),
        sign_reference=m.get("sign_reference", None),
    )


def write_spec(spec: DfmSpec, path) -> None:
    cp = configparser.ConfigParser()
    cp["model"] = {
        "grid_start": spec.grid_start.isoformat(),
        "grid_end": spec.grid_end.isoformat(),
        "factor_ar_order": str(spec.factor_ar_order),
        "week_end": _WEEKDAYS[spec.week_end],
    }
    if spec.sign_reference:
        cp["model"]["sign_reference"] = spec.sign_reference
    for ind in spec.indicators:
        cp[f"indicator.{ind.id}"] = {
            "frequency": ind.frequency.value,
            "kind": ind.kind.value,
            "transform": ind.transform.value,
            "measurement_error": ind.measurement_error.value,
        }
    with open(path, "w") as fh:
        cp.write(fh)


# ---------------------------------------------------------------------------
# Params (flat key-value text)


def write_params(params: DfmParams, path, scaling: Scaling | None = None) -> None:
    lines = []
    for i, rho in enumerate(params.factor_ar, start=1):
        lines.append(f"factor_ar.{i} = {_fmt(rho)}")
    for group in ("loading", "err_std", "err_ar", "mean"):
        d = getattr(params, group)
        for key in d:
            lines.append(f"{group}.{key} = {_fmt(d[key])}")
    if scaling is not None:
        for key in scaling.loc:
            lines.append(f"loc.{key} = {_fmt(scaling.loc[key])}")
            lines.append(f"scale.{key} = {_fmt(scaling.scale[key])}")
    FsPath(path).write_text("\n".join(lines) + "\n")


def read_params(path, spec: DfmSpec) -> tuple[DfmParams, Scaling]:
    """Read a flat key-value params file; missing scaling keys mean identity."""
    entries: dict[str, float] = {}
    for lineno, raw in enumerate(FsPath(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        try:
            entries[key.strip()] = float(value.strip())
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: bad float {value.strip()!r}") from None

    ar = []
    for i in range(1, spec.factor_ar_order + 1):
        key = f"factor_ar.{i}"
        if key not in entries:
            raise ConfigError(f"{path}: missing {key}")
        ar.append(entries[key])
    groups = {"loading": {}, "err_std": {}, "err_ar": {}, "mean": {}}
    for group, d in groups.items():
        for ind_id in spec.ids:
            key = f"{group}.{ind_id}"
            if key not in entries:
                raise ConfigError(f"{path}: missing {key}")
            d[ind_id] = entries[key]
    params = DfmParams(factor_ar=tuple(ar), **groups)
    params.validate(spec)
    loc = {i: entries.get(f"loc.{i}", 0.0) for i in spec.ids}
    scale = {i: entries.get(f"scale.{i}", 1.0) for i in spec.ids}
    return params, Scaling(loc=loc, scale=scale)


# ---------------------------------------------------------------------------
# CSV schemas


def write_series_csv(path, rows: list[tuple[dt.date, float]],
                     header: tuple[str, str] = ("period_end", "value")) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for date, value in rows:
            w.writerow([date.isoformat(), "" if math.isnan(value) else _fmt(value)])


def read_series_csv(path, header: tuple[str, str] = ("period_end", "value")) -> list[tuple[dt.date, float]]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        head = next(reader, None)
        if head is None or [c.strip() for c in head[:2]] != list(header):
            raise ValidationError(f"{path}: expected header '{header[0]},{header[1]}'")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                date = dt.date.fromisoformat(row[0].strip())
                raw = row[1].strip() if len(row) > 1 else ""
                value = float("nan") if raw == "" else float(raw)
            except (ValueError, IndexError) as e:
                raise ValidationError(f"{path}:{lineno}: malformed row {row!r} ({e})") from None
            rows.append((date, value))
    return rows


def write_observations(directory, obs: ObservationSet) -> None:
    """One period_end,value CSV per indicator (also the per-vintage layout)."""
    root = FsPath(directory)
    root.mkdir(parents=True, exist_ok=True)
    for ind, rows in sorted(obs.series.items()):
        write_series_csv(root / f"{ind}.csv", rows)


def read_observations(directory) -> ObservationSet:
    root = FsPath(directory)
    if not root.is_dir():
        raise ValidationError(f"{root} is not a directory")
    return ObservationSet({f.stem: read_series_csv(f) for f in sorted(root.glob("*.csv"))})


def write_path_csv(path_obj: Path, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "ads", "std"])
        for date, value, std in zip(path_obj.dates(), path_obj.values, path_obj.stds):
            w.writerow([date.isoformat(), _fmt(value), _fmt(std)])


def read_path_csv(path) -> Path:
    dates, values, stds = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        head = next(reader, None)
        if head is None or [c.strip() for c in head[:3]] != ["date", "ads", "std"]:
            raise ValidationError(f"{path}: expected header 'date,ads,std'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                dates.append(dt.date.fromisoformat(row[0].strip()))
                values.append(float(row[1]))
                stds.append(float(row[2]) if len(row) > 2 and row[2].strip() else 0.0)
            except (ValueError, IndexError) as e:
                raise ValidationError(f"{path}:{lineno}: malformed row {row!r} ({e})") from None
    if not dates:
        raise ValidationError(f"{path}: empty path")
    for a, b in zip(dates, dates[1:]):
        if (b - a).days != 1:
            raise ValidationError(f"{path}: dates not contiguous around {a}")
    return Path(pull_timestamp=None, start=dates[0],
                values=np.array(values), stds=np.array(stds))


def write_dots_csv(dots: DotSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["vintage", "ads"])
        for stamp, value in dots.points:
            w.writerow([stamp.isoformat(), _fmt(value)])


def read_events_csv(path) -> list[ReleaseEvent]:
    """Release-event log: timestamp,indicator,period_end,value."""
    events = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        head = next(reader, None)
        expected = ["timestamp", "indicator", "period_end", "value"]
        if head is None or [c.strip() for c in head[:4]] != expected:
            raise ValidationError(f"{path}: expected header '{','.join(expected)}'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                events.append(ReleaseEvent(
                    timestamp=dt.datetime.fromisoformat(row[0].strip()),
                    indicator=row[1].strip(),
                    period_end=dt.date.fromisoformat(row[2].strip()),
                    value=float(row[3]),
                ))
            except (ValueError, IndexError) as e:
                raise ValidationError(f"{path}:{lineno}: malformed row {row!r} ({e})") from None
    return events


def write_events_csv(events: list[ReleaseEvent], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "indicator", "period_end", "value"])
        for e in events:
            w.writerow([e.timestamp.isoformat(), e.indicator,
                        e.period_end.isoformat(), _fmt(e.value)])
