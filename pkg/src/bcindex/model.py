"""Mixed-frequency dynamic factor model and its state-space compilation.

One latent daily activity factor follows an AR(p) with innovation standard
deviation pinned to 1 (identification).  Each weekly/monthly/quarterly flow
indicator k observed for period P is

    y_k(P) = mu_k + lambda_k * (1/n_days(P)) * sum_{t in P} x_t + u_k(P),

implemented with a per-indicator cumulator state that resets at each period
start and accumulates the factor with weight 1/n_days(P).  Because periods
have varying lengths, the transition and shock-covariance matrices are
time-varying.  Measurement rows exist only on period-end days; AR(1)
measurement errors get their own state slot that moves once per period.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.linalg import solve_discrete_lyapunov

from .calendar import SATURDAY, Day, DayGrid, Frequency, previous_period_end
from .errors import ConfigError, ValidationError

CUMULATOR_INIT_VARIANCE = 1.0e7


class Kind(str, Enum):
    STOCK = "stock"
    FLOW = "flow"


class Transform(str, Enum):
    LEVEL = "level"
    DIFFERENCE = "difference"
    LOG_DIFFERENCE = "log_difference"


class ErrorModel(str, Enum):
    IID = "iid"
    AR1 = "ar1"


@dataclass(frozen=True)
class IndicatorSpec:
    """One observed indicator: frequency, stock/flow, ingestion transform, error model."""

    id: str
    frequency: Frequency
    kind: Kind = Kind.FLOW
    transform: Transform = Transform.LEVEL
    measurement_error: ErrorModel = ErrorModel.IID


@dataclass(frozen=True)
class DfmSpec:
    """Model definition: ordered indicators plus the daily grid they live on."""

    indicators: tuple[IndicatorSpec, ...]
    grid_start: dt.date
    grid_end: dt.date
    factor_ar_order: int = 1
    week_end: int = SATURDAY
    sign_reference: str | None = None

    def __post_init__(self):
        if not self.indicators:
            raise ConfigError("spec needs at least one indicator")
        ids = [ind.id for ind in self.indicators]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"duplicate indicator ids: {ids}")
        if self.factor_ar_order < 1:
            raise ConfigError("factor_ar_order must be >= 1")
        if self.grid_end < self.grid_start:
            raise ConfigError("grid_end precedes grid_start")
        if self.sign_reference is not None and self.sign_reference not in ids:
            raise ConfigError(f"sign_reference {self.sign_reference!r} is not an indicator id")

    def grid(self) -> DayGrid:
        return DayGrid(self.grid_start, self.grid_end, self.week_end)

    def indicator(self, id: str) -> IndicatorSpec:
        for ind in self.indicators:
            if ind.id == id:
                return ind
        raise ConfigError(f"unknown indicator {id!r}")

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(ind.id for ind in self.indicators)


@dataclass
class DfmParams:
    """Free parameters, all in transformed/standardized data units.

    The factor innovation standard deviation is fixed at 1, so the loadings
    carry the scale.  ``err_ar`` entries must be 0 for iid indicators.
    """

    factor_ar: tuple[float, ...]
    loading: dict[str, float]
    err_std: dict[str, float]
    err_ar: dict[str, float]
    mean: dict[str, float]

    def validate(self, spec: DfmSpec) -> None:
        if len(self.factor_ar) != spec.factor_ar_order:
            raise ConfigError(
                f"factor_ar has {len(self.factor_ar)} coefficients, spec wants {spec.factor_ar_order}"
            )
        if ar_max_root(self.factor_ar) >= 1.0 - 1e-10:
            raise ConfigError(f"factor AR polynomial not stationary: {self.factor_ar}")
        for name, d in (("loading", self.loading), ("err_std", self.err_std),
                        ("err_ar", self.err_ar), ("mean", self.mean)):
            missing = set(spec.ids) - set(d)
            if missing:
                raise ConfigError(f"{name} missing entries for {sorted(missing)}")
        for ind in spec.indicators:
            if self.err_std[ind.id] <= 0:
                raise ConfigError(f"err_std[{ind.id}] must be > 0")
            phi = self.err_ar[ind.id]
            if ind.measurement_error == ErrorModel.IID and phi != 0.0:
                raise ConfigError(f"{ind.id} has iid measurement error but err_ar={phi}")
            if not -1.0 < phi < 1.0:
                raise ConfigError(f"err_ar[{ind.id}]={phi} outside (-1, 1)")


def ar_max_root(coeffs) -> float:
    """Largest companion-matrix eigenvalue modulus (stationary iff < 1)."""
    p = len(coeffs)
    if p == 1:
        return abs(coeffs[0])
    comp = np.zeros((p, p))
    comp[0, :] = coeffs
    comp[1:, :-1] = np.eye(p - 1)
    return float(np.abs(np.linalg.eigvals(comp)).max())


def default_params(spec: DfmSpec) -> DfmParams:
    """Neutral starting point on standardized data: rho=0.9 daily, unit loadings."""
    ar = (0.9,) + (0.0,) * (spec.factor_ar_order - 1)
    return DfmParams(
        factor_ar=ar,
        loading={i: 1.0 for i in spec.ids},
        err_std={i: 1.0 for i in spec.ids},
        err_ar={i: 0.0 for i in spec.ids},
        mean={i: 0.0 for i in spec.ids},
    )


# ---------------------------------------------------------------------------
# Observations


@dataclass
class ObservationSet:
    """Per-indicator observations keyed by period-end date.

    Values may be NaN, which the filter treats as a declared-but-missing slot.
    Series are kept sorted by period end with no duplicate dates.
    """

    series: dict[str, list[tuple[dt.date, float]]] = field(default_factory=dict)

    def __post_init__(self):
        for ind, rows in self.series.items():
            rows.sort(key=lambda r: r[0])
            for a, b in zip(rows, rows[1:]):
                if a[0] == b[0]:
                    raise ValidationError(f"duplicate observation for {ind} at {a[0]}")

    def items(self):
        for ind, rows in self.series.items():
            for date, value in rows:
                yield ind, date, value

    @property
    def n_obs(self) -> int:
        return sum(len(rows) for rows in self.series.values())

    def indicators(self) -> list[str]:
        return list(self.series)

    def truncated(self, through: dt.date) -> "ObservationSet":
        return ObservationSet(
            {ind: [r for r in rows if r[0] <= through] for ind, rows in self.series.items()}
        )

    def latest_period_end(self) -> dt.date | None:
        ends = [rows[-1][0] for rows in self.series.values() if rows]
        return max(ends) if ends else None

    def equals(self, other: "ObservationSet", tol: float = 0.0) -> bool:
        if set(self.series) != set(other.series):
            return False
        for ind in self.series:
            a, b = self.series[ind], other.series[ind]
            if len(a) != len(b):
                return False
            for (da, va), (db, vb) in zip(a, b):
                if da != db:
                    return False
                if math.isnan(va) != math.isnan(vb):
                    return False
                if not math.isnan(va) and abs(va - vb) > tol:
                    return False
        return True


def transform_observations(spec: DfmSpec, obs: ObservationSet) -> ObservationSet:
    """Apply each indicator's ingestion transform (level / diff / log-diff).

    Differences pair a period with the immediately preceding period of the
    same frequency; runs broken by gaps lose their first observation.  NaN
    rows are dropped before differencing.
    """
    out: dict[str, list[tuple[dt.date, float]]] = {}
    for ind_id, rows in obs.series.items():
        ind = spec.indicator(ind_id)
        if ind.transform == Transform.LEVEL:
            out[ind_id] = list(rows)
            continue
        valid = [(d, v) for d, v in rows if not math.isnan(v)]
        by_date = dict(valid)
        transformed = []
        for date, value in valid:
            prev_end = previous_period_end(date, ind.frequency)
            if prev_end not in by_date:
                continue
            prev = by_date[prev_end]
            if ind.transform == Transform.DIFFERENCE:
                transformed.append((date, value - prev))
            else:
                if value <= 0 or prev <= 0:
                    raise ValidationError(
                        f"log_difference needs positive values; {ind_id} at {date}"
                    )
                transformed.append((date, math.log(value) - math.log(prev)))
        out[ind_id] = transformed
    return ObservationSet(out)


@dataclass(frozen=True)
class Scaling:
    """Per-indicator location/scale applied before the model sees data.

    Fitted on the estimation sample; the model's mean parameters absorb
    whatever small means remain after standardization.
    """

    loc: dict[str, float]
    scale: dict[str, float]

    @classmethod
    def identity(cls, spec: DfmSpec) -> "Scaling":
        return cls({i: 0.0 for i in spec.ids}, {i: 1.0 for i in spec.ids})

    @classmethod
    def fit(cls, spec: DfmSpec, obs: ObservationSet) -> "Scaling":
        loc, scale = {}, {}
        for i in spec.ids:
            vals = np.array([v for d, v in obs.series.get(i, []) if not math.isnan(v)])
            if vals.size == 0:
                loc[i], scale[i] = 0.0, 1.0
                continue
            loc[i] = float(vals.mean())
            s = float(vals.std())
            scale[i] = s if s > 0 else 1.0
        return cls(loc, scale)

    def apply(self, obs: ObservationSet) -> ObservationSet:
        out = {}
        for ind, rows in obs.series.items():
            if ind not in self.loc:
                raise ValidationError(f"no scaling entry for indicator {ind!r}")
            l, s = self.loc[ind], self.scale[ind]
            out[ind] = [(d, (v - l) / s) for d, v in rows]
        return ObservationSet(out)


# ---------------------------------------------------------------------------
# State-space compilation


@dataclass(frozen=True)
class StateLayout:
    """Which state slot holds what: factor lags, cumulators, AR(1) error states."""

    p: int
    cum_col: dict[str, int]
    err_col: dict[str, int]

    @property
    def dim(self) -> int:
        return self.p + len(self.cum_col) + len(self.err_col)


@dataclass
class StateSpaceSystem:
    """Compiled time-varying linear-Gaussian system on the daily grid.

    ``T[t]``/``Q[t]`` map day t-1 to day t (index 0 is unused); ``a0``/``P0``
    is the day-0 prior.  Measurement rows are flattened into slot arrays
    sorted by (day, indicator position); ``h`` holds the iid measurement
    error variance per row (0 when the error lives in the state).
    """

    spec: DfmSpec
    grid: DayGrid
    layout: StateLayout
    T: np.ndarray
    Q: np.ndarray
    a0: np.ndarray
    P0: np.ndarray
    slot_day: np.ndarray
    slot_indicator: np.ndarray
    Z: np.ndarray
    d: np.ndarray
    h: np.ndarray

    _slot_map: dict | None = None

    @property
    def n_days(self) -> int:
        return self.grid.n_days

    @property
    def n_slots(self) -> int:
        return len(self.slot_day)

    def slot_index(self, day_index: int, indicator_pos: int) -> int | None:
        if self._slot_map is None:
            self._slot_map = {
                (int(day), int(pos)): i
                for i, (day, pos) in enumerate(zip(self.slot_day, self.slot_indicator))
            }
        return self._slot_map.get((day_index, indicator_pos))


def _factor_stationary_cov(rho: tuple[float, ...]) -> np.ndarray:
    p = len(rho)
    if p == 1:
        return np.array([[1.0 / (1.0 - rho[0] ** 2)]])
    comp = np.zeros((p, p))
    comp[0, :] = rho
    comp[1:, :-1] = np.eye(p - 1)
    q = np.zeros((p, p))
    q[0, 0] = 1.0
    cov = solve_discrete_lyapunov(comp, q)
    return 0.5 * (cov + cov.T)


def build_layout(spec: DfmSpec) -> StateLayout:
    p = spec.factor_ar_order
    cum_col, err_col = {}, {}
    col = p
    for ind in spec.indicators:
        if ind.frequency != Frequency.DAILY and ind.kind == Kind.FLOW:
            cum_col[ind.id] = col
            col += 1
    for ind in spec.indicators:
        if ind.measurement_error == ErrorModel.AR1:
            err_col[ind.id] = col
            col += 1
    return StateLayout(p=p, cum_col=cum_col, err_col=err_col)


@dataclass(frozen=True)
class _Structure:
    """Params-independent compilation of a spec: period weights, reset days, slots.

    Cached per spec so the estimation objective only fills in parameter
    values when it rebuilds the system.
    """

    layout: StateLayout
    n_days: int
    cum_weight: np.ndarray  # (n_cum, n_days) 1/n_days of the enclosing period
    cum_gamma: np.ndarray   # (n_cum, n_days) 0 on period-start days, else 1
    err_move: np.ndarray    # (n_err, n_days) True where the error state steps
    slot_day: np.ndarray
    slot_pos: np.ndarray
    slot_load_col: np.ndarray  # state column carrying the loading
    slot_err_col: np.ndarray   # error state column or -1
    cum_pos: np.ndarray        # indicator position per cumulator row
    err_pos: np.ndarray        # indicator position per error row


@lru_cache(maxsize=64)
def _build_structure(spec: DfmSpec) -> _Structure:
    grid = spec.grid()
    layout = build_layout(spec)
    n = grid.n_days

    periods_by_freq = {}
    for ind in spec.indicators:
        if ind.frequency not in periods_by_freq:
            periods_by_freq[ind.frequency] = grid.periods(ind.frequency)

    n_cum, n_err = len(layout.cum_col), len(layout.err_col)
    cum_weight = np.zeros((n_cum, n))
    cum_gamma = np.ones((n_cum, n))
    err_move = np.zeros((n_err, n), dtype=bool)
    cum_pos = np.zeros(n_cum, dtype=np.int64)
    err_pos = np.zeros(n_err, dtype=np.int64)

    ids = list(spec.ids)
    for ind in spec.indicators:
        pos = ids.index(ind.id)
        periods = periods_by_freq[ind.frequency]
        if ind.id in layout.cum_col:
            k = layout.cum_col[ind.id] - layout.p
            cum_pos[k] = pos
            for per in periods:
                cum_weight[k, per.start.index: per.end.index + 1] = 1.0 / per.n_days
                cum_gamma[k, per.start.index] = 0.0
        if ind.id in layout.err_col:
            k = layout.err_col[ind.id] - layout.p - n_cum
            err_pos[k] = pos
            for per in periods:
                if per.start.index > 0:
                    err_move[k, per.start.index] = True

    slot_day, slot_pos, load_col, err_col_arr = [], [], [], []
    for pos, ind in enumerate(spec.indicators):
        for per in periods_by_freq[ind.frequency]:
            if not per.complete:
                continue
            slot_day.append(per.end.index)
            slot_pos.append(pos)
            load_col.append(layout.cum_col.get(ind.id, 0))
            err_col_arr.append(layout.err_col.get(ind.id, -1))

    order = np.lexsort((np.array(slot_pos), np.array(slot_day)))
    return _Structure(
        layout=layout,
        n_days=n,
        cum_weight=cum_weight,
        cum_gamma=cum_gamma,
        err_move=err_move,
        slot_day=np.array(slot_day, dtype=np.int64)[order],
        slot_pos=np.array(slot_pos, dtype=np.int64)[order],
        slot_load_col=np.array(load_col, dtype=np.int64)[order],
        slot_err_col=np.array(err_col_arr, dtype=np.int64)[order],
        cum_pos=cum_pos,
        err_pos=err_pos,
    )


def build_state_space(spec: DfmSpec, params: DfmParams) -> StateSpaceSystem:
    """Compile spec+params into per-day matrices with flow cumulators.

    Measurement rows are emitted for every complete period of every
    indicator, whether or not data will arrive for them; the filter deletes
    rows without values.
    """
    params.validate(spec)
    st = _build_structure(spec)
    layout = st.layout
    n, m, p = st.n_days, layout.dim, layout.p
    n_cum, n_err = len(layout.cum_col), len(layout.err_col)
    rho = np.array(params.factor_ar)
    lam = np.array([params.loading[i] for i in spec.ids])
    sig2 = np.array([params.err_std[i] ** 2 for i in spec.ids])
    phi = np.array([params.err_ar[i] for i in spec.ids])
    mu = np.array([params.mean[i] for i in spec.ids])

    T = np.zeros((n, m, m))
    T[0] = np.eye(m)
    T[1:, 0, :p] = rho
    for j in range(1, p):
        T[1:, j, j - 1] = 1.0
    for k in range(n_cum):
        c = p + k
        T[1:, c, :p] = st.cum_weight[k, 1:, None] * rho
        T[1:, c, c] = st.cum_gamma[k, 1:]
    for k in range(n_err):
        e = p + n_cum + k
        T[1:, e, e] = np.where(st.err_move[k, 1:], phi[st.err_pos[k]], 1.0)

    S = np.zeros((n, m))
    S[:, 0] = 1.0
    for k in range(n_cum):
        S[:, p + k] = st.cum_weight[k]
    Q = S[:, :, None] * S[:, None, :]
    for k in range(n_err):
        e = p + n_cum + k
        Q[st.err_move[k], e, e] += sig2[st.err_pos[k]]
    Q[0] = 0.0

    a0 = np.zeros(m)
    P0 = np.zeros((m, m))
    P0[:p, :p] = _factor_stationary_cov(params.factor_ar)
    for k in range(n_cum):
        P0[p + k, p + k] = CUMULATOR_INIT_VARIANCE
    for k in range(n_err):
        e = p + n_cum + k
        pos = st.err_pos[k]
        P0[e, e] = sig2[pos] / (1.0 - phi[pos] ** 2)

    n_slots = len(st.slot_day)
    Z = np.zeros((n_slots, m))
    rows = np.arange(n_slots)
    Z[rows, st.slot_load_col] = lam[st.slot_pos]
    has_err = st.slot_err_col >= 0
    Z[rows[has_err], st.slot_err_col[has_err]] = 1.0
    h = np.where(has_err, 0.0, sig2[st.slot_pos])
    d = mu[st.slot_pos]

    return StateSpaceSystem(
        spec=spec,
        grid=spec.grid(),
        layout=layout,
        T=T,
        Q=Q,
        a0=a0,
        P0=P0,
        slot_day=st.slot_day,
        slot_indicator=st.slot_pos,
        Z=Z,
        d=d,
        h=h,
    )


# ---------------------------------------------------------------------------
# Simulation


@dataclass
class SimulationResult:
    factor: np.ndarray  # daily latent path over the grid
    observations: ObservationSet


def simulate(spec: DfmSpec, params: DfmParams, seed: int,
             shock_scale: float = 1.0, init: str = "stationary") -> SimulationResult:
    """Draw a factor path and observations from the exact measurement equations.

    Deterministic in ``seed``.  ``shock_scale`` multiplies the factor
    innovation and all measurement error standard deviations (0 gives a
    shock-free path driven purely by the initial state); ``init`` picks the
    pre-sample factor state ("stationary" draw or "zero").
    """
    params.validate(spec)
    if init not in ("stationary", "zero"):
        raise ValidationError(f"init must be 'stationary' or 'zero', got {init!r}")
    rng = np.random.default_rng(seed)
    grid = spec.grid()
    n, p = grid.n_days, spec.factor_ar_order
    rho = np.array(params.factor_ar)

    chol = np.linalg.cholesky(_factor_stationary_cov(params.factor_ar))
    if init == "stationary":
        lags = shock_scale * (chol @ rng.standard_normal(p))  # [x_{-1}, ..., x_{-p}]
    else:
        rng.standard_normal(p)  # keep the draw stream identical across init modes
        lags = np.zeros(p)
    eta = shock_scale * rng.standard_normal(n)

    x = np.empty(n)
    state = list(lags)
    for t in range(n):
        x[t] = float(rho @ state) + eta[t]
        state = [x[t]] + state[:-1]

    series: dict[str, list[tuple[dt.date, float]]] = {}
    for ind in spec.indicators:
        rows = []
        periods = grid.complete_periods(ind.frequency)
        eps = rng.standard_normal(len(periods))
        sig = params.err_std[ind.id] * shock_scale
        phi = params.err_ar[ind.id]
        u_prev = 0.0
        for j, per in enumerate(periods):
            seg = x[per.start.index: per.end.index + 1]
            agg = seg[-1] if ind.kind == Kind.STOCK and ind.frequency != Frequency.DAILY else seg.mean()
            if ind.measurement_error == ErrorModel.AR1:
                if j == 0:
                    u = sig / math.sqrt(1.0 - phi ** 2) * eps[j]
                else:
                    u = phi * u_prev + sig * eps[j]
                u_prev = u
            else:
                u = sig * eps[j]
            rows.append((per.end.date, params.mean[ind.id] + params.loading[ind.id] * agg + u))
        series[ind.id] = rows
    return SimulationResult(factor=x, observations=ObservationSet(series))


# ---------------------------------------------------------------------------
# Named parameter coordinates (shared by estimation and diagnostics)


def param_names(spec: DfmSpec) -> list[str]:
    names = [f"factor_ar.{i + 1}" for i in range(spec.factor_ar_order)]
    for ind in spec.indicators:
        names += [f"loading.{ind.id}", f"err_std.{ind.id}"]
        if ind.measurement_error == ErrorModel.AR1:
            names.append(f"err_ar.{ind.id}")
        names.append(f"mean.{ind.id}")
    return names


def named_values(spec: DfmSpec, params: DfmParams) -> dict[str, float]:
    out = {f"factor_ar.{i + 1}": v for i, v in enumerate(params.factor_ar)}
    for ind in spec.indicators:
        out[f"loading.{ind.id}"] = params.loading[ind.id]
        out[f"err_std.{ind.id}"] = params.err_std[ind.id]
        if ind.measurement_error == ErrorModel.AR1:
            out[f"err_ar.{ind.id}"] = params.err_ar[ind.id]
        out[f"mean.{ind.id}"] = params.mean[ind.id]
    return out


def with_value(spec: DfmSpec, params: DfmParams, name: str, value: float) -> DfmParams:
    """Copy of ``params`` with one named coordinate replaced."""
    if name not in param_names(spec):
        raise ValidationError(f"unknown parameter coordinate {name!r}")
    group, _, key = name.partition(".")
    if group == "factor_ar":
        i = int(key) - 1
        ar = list(params.factor_ar)
        ar[i] = value
        return replace(params, factor_ar=tuple(ar))
    d = dict(getattr(params, group))
    d[key] = value
    return replace(params, **{group: d})


def flip_sign(params: DfmParams) -> DfmParams:
    """The global {loadings, factor} sign flip; the likelihood is invariant."""
    return replace(params, loading={k: -v for k, v in params.loading.items()})


def canonical_spec(grid_start: dt.date = dt.date(1960, 3, 1),
                   grid_end: dt.date = dt.date(2020, 6, 26)) -> DfmSpec:
    """Six-indicator configuration mirroring the shipped example config file."""
    return DfmSpec(
        indicators=(
            IndicatorSpec("claims", Frequency.WEEKLY, Kind.FLOW, Transform.LEVEL, ErrorModel.IID),
            IndicatorSpec("employment", Frequency.MONTHLY, Kind.FLOW, Transform.LOG_DIFFERENCE, ErrorModel.AR1),
            IndicatorSpec("ip", Frequency.MONTHLY, Kind.FLOW, Transform.LOG_DIFFERENCE, ErrorModel.AR1),
            IndicatorSpec("income", Frequency.MONTHLY, Kind.FLOW, Transform.LOG_DIFFERENCE, ErrorModel.AR1),
            IndicatorSpec("sales", Frequency.MONTHLY, Kind.FLOW, Transform.LOG_DIFFERENCE, ErrorModel.AR1),
            IndicatorSpec("gdp", Frequency.QUARTERLY, Kind.FLOW, Transform.LOG_DIFFERENCE, ErrorModel.AR1),
        ),
        grid_start=grid_start,
        grid_end=grid_end,
        sign_reference="employment",
    )
