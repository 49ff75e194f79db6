"""Missing-data Kalman filter, exact log-likelihood, and fixed-interval smoother.

Observations are processed one row at a time (measurement error covariance is
diagonal by construction, with serially correlated errors living in the
state), so missing data is handled by literally deleting absent rows; days
with no rows run the prediction step only.  The log-likelihood comes from the
prediction-error decomposition over realized rows.  Covariance updates use
the Joseph form and are re-symmetrized every step, which keeps 22,000+ day
grids well behaved.

The smoother is the fixed-interval backward recursion written in terms of the
per-row innovations and gains, which avoids inverting predicted covariances
(exactly singular on cumulator reset days) and yields the same smoothed
moments as the classic gain form.  Smoothed and filtered moments coincide on
the final day; the smoother enforces that identity exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import NumericalError, SchemaError, ValidationError
from .model import ObservationSet, StateSpaceSystem

_LOG2PI = math.log(2.0 * math.pi)


@njit(cache=True)
def _filter_kernel(T, Q, a0, P0, row_day, Z, d, h, y):
    n_days = T.shape[0]
    m = a0.shape[0]
    n_rows = row_day.shape[0]
    a_pred = np.zeros((n_days, m))
    P_pred = np.zeros((n_days, m, m))
    a_filt = np.zeros((n_days, m))
    P_filt = np.zeros((n_days, m, m))
    v = np.zeros(n_rows)
    F = np.zeros(n_rows)
    K = np.zeros((n_rows, m))
    eye = np.eye(m)
    a = a0.copy()
    P = P0.copy()
    loglik = 0.0
    r = 0
    for t in range(n_days):
        if t > 0:
            a = T[t] @ a
            P = T[t] @ P @ T[t].T + Q[t]
            P = 0.5 * (P + P.T)
        a_pred[t] = a
        P_pred[t] = P
        while r < n_rows and row_day[r] == t:
            z = Z[r]
            pz = P @ z
            f = z @ pz + h[r]
            if not np.isfinite(f) or f <= 0.0:
                return t, loglik, a_pred, P_pred, a_filt, P_filt, v, F, K
            res = y[r] - d[r] - z @ a
            k = pz / f
            a = a + k * res
            ikz = eye - np.outer(k, z)
            P = ikz @ P @ ikz.T + h[r] * np.outer(k, k)
            P = 0.5 * (P + P.T)
            loglik += -0.5 * (_LOG2PI + np.log(f) + res * res / f)
            v[r] = res
            F[r] = f
            K[r] = k
            r += 1
        a_filt[t] = a
        P_filt[t] = P
    return -1, loglik, a_pred, P_pred, a_filt, P_filt, v, F, K


@njit(cache=True)
def _loglik_kernel(T, Q, a0, P0, row_day, Z, d, h, y):
    n_days = T.shape[0]
    m = a0.shape[0]
    n_rows = row_day.shape[0]
    eye = np.eye(m)
    a = a0.copy()
    P = P0.copy()
    loglik = 0.0
    r = 0
    for t in range(n_days):
        if t > 0:
            a = T[t] @ a
            P = T[t] @ P @ T[t].T + Q[t]
            P = 0.5 * (P + P.T)
        while r < n_rows and row_day[r] == t:
            z = Z[r]
            pz = P @ z
            f = z @ pz + h[r]
            if not np.isfinite(f) or f <= 0.0:
                return t, loglik
            res = y[r] - d[r] - z @ a
            k = pz / f
            a = a + k * res
            ikz = eye - np.outer(k, z)
            P = ikz @ P @ ikz.T + h[r] * np.outer(k, k)
            P = 0.5 * (P + P.T)
            loglik += -0.5 * (_LOG2PI + np.log(f) + res * res / f)
            r += 1
        if r >= n_rows:
            break
    return -1, loglik


@njit(cache=True)
def _smoother_kernel(T, a_pred, P_pred, row_day, Z, v, F, K):
    n_days = T.shape[0]
    m = a_pred.shape[1]
    n_rows = row_day.shape[0]
    a_sm = np.zeros((n_days, m))
    P_sm = np.zeros((n_days, m, m))
    eye = np.eye(m)
    rvec = np.zeros(m)
    N = np.zeros((m, m))
    r = n_rows - 1
    for t in range(n_days - 1, -1, -1):
        while r >= 0 and row_day[r] == t:
            z = Z[r]
            L = eye - np.outer(K[r], z)
            rvec = z * (v[r] / F[r]) + L.T @ rvec
            N = np.outer(z, z) / F[r] + L.T @ N @ L
            r -= 1
        a_sm[t] = a_pred[t] + P_pred[t] @ rvec
        Pt = P_pred[t] - P_pred[t] @ N @ P_pred[t]
        P_sm[t] = 0.5 * (Pt + Pt.T)
        if t > 0:
            rvec = T[t].T @ rvec
            N = T[t].T @ N @ T[t]
    return a_sm, P_sm


@dataclass
class FilterResult:
    """Forward-pass output: per-day moments plus per-row innovations."""

    system: StateSpaceSystem
    log_likelihood: float
    predicted_mean: np.ndarray
    predicted_cov: np.ndarray
    filtered_mean: np.ndarray
    filtered_cov: np.ndarray
    row_slot: np.ndarray
    row_day: np.ndarray
    errors: np.ndarray
    error_variances: np.ndarray
    gains: np.ndarray


@dataclass
class SmootherResult:
    """Smoothed moments; the factor column of ``mean`` is the extracted index."""

    mean: np.ndarray
    cov: np.ndarray

    @property
    def index_values(self) -> np.ndarray:
        return self.mean[:, 0]

    @property
    def index_std(self) -> np.ndarray:
        return np.sqrt(np.maximum(self.cov[:, 0, 0], 0.0))


def match_rows(system: StateSpaceSystem, observations: ObservationSet):
    """Resolve observations onto the system's declared measurement slots.

    Returns (slot indices, values), sorted by slot.  NaN values count as
    missing and are dropped; an observation with no declared slot is a schema
    error.
    """
    ids = list(system.spec.ids)
    slots, values = [], []
    for ind, date, value in observations.items():
        if math.isnan(value):
            continue
        try:
            pos = ids.index(ind)
        except ValueError:
            raise SchemaError(f"observation for unknown indicator {ind!r}") from None
        if date not in system.grid:
            raise SchemaError(f"{ind} observation at {date} falls outside the grid")
        day = system.grid.day(date)
        slot = system.slot_index(day.index, pos)
        if slot is None:
            raise SchemaError(
                f"{ind} observation at {date} does not end a complete {system.spec.indicator(ind).frequency.value} period"
            )
        slots.append(slot)
        values.append(float(value))
    order = np.argsort(np.array(slots, dtype=np.int64), kind="stable")
    return (
        np.array(slots, dtype=np.int64)[order],
        np.array(values, dtype=np.float64)[order],
    )


def filter(system: StateSpaceSystem, observations: ObservationSet) -> FilterResult:
    """Run the forward pass; see the module docstring for conventions."""
    slots, values = match_rows(system, observations)
    status, loglik, a_pred, P_pred, a_filt, P_filt, v, F, K = _filter_kernel(
        system.T, system.Q, system.a0, system.P0,
        system.slot_day[slots], system.Z[slots], system.d[slots], system.h[slots],
        values,
    )
    if status >= 0:
        raise NumericalError(
            f"non-positive innovation variance at day {status} "
            f"({system.grid.day_at(status).date})", day=status,
        )
    return FilterResult(
        system=system,
        log_likelihood=float(loglik),
        predicted_mean=a_pred,
        predicted_cov=P_pred,
        filtered_mean=a_filt,
        filtered_cov=P_filt,
        row_slot=slots,
        row_day=system.slot_day[slots],
        errors=v,
        error_variances=F,
        gains=K,
    )


def smooth(system: StateSpaceSystem, filter_result: FilterResult) -> SmootherResult:
    """Fixed-interval smoother over a completed filter pass."""
    if filter_result.system is not system:
        raise ValidationError("filter result was produced from a different system")
    mean, cov = _smoother_kernel(
        system.T,
        filter_result.predicted_mean,
        filter_result.predicted_cov,
        filter_result.row_day,
        system.Z[filter_result.row_slot],
        filter_result.errors,
        filter_result.error_variances,
        filter_result.gains,
    )
    mean[-1] = filter_result.filtered_mean[-1]
    cov[-1] = filter_result.filtered_cov[-1]
    return SmootherResult(mean=mean, cov=cov)


def log_likelihood(system: StateSpaceSystem, observations: ObservationSet) -> float:
    """Gaussian log-likelihood via the prediction-error decomposition."""
    slots, values = match_rows(system, observations)
    return log_likelihood_rows(system, slots, values)


def log_likelihood_rows(system: StateSpaceSystem, slots: np.ndarray, values: np.ndarray) -> float:
    """Likelihood for pre-matched rows; the hot path for estimation."""
    status, loglik = _loglik_kernel(
        system.T, system.Q, system.a0, system.P0,
        system.slot_day[slots], system.Z[slots], system.d[slots], system.h[slots],
        values,
    )
    if status >= 0:
        raise NumericalError(
            f"non-positive innovation variance at day {status}", day=status
        )
    return float(loglik)
