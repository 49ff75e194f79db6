"""Shared test oracles and fixture builders.

The joint-Gaussian oracle assembles the full covariance of (states,
observations) by brute force and conditions directly; it never touches the
recursive filter code it is used to check.
"""

from __future__ import annotations

import datetime as dt

import numpy as np


def joint_gaussian_oracle(T, Q, a0, P0, row_day, Z, d, h, y):
    """Exact conditional moments and observation log-density for small systems."""
    n_days, m = T.shape[0], a0.shape[0]
    n_rows = len(row_day)

    mean_a = np.zeros((n_days, m))
    mean_a[0] = a0
    cov = np.zeros((n_days, n_days, m, m))
    cov[0, 0] = P0
    for t in range(1, n_days):
        mean_a[t] = T[t] @ mean_a[t - 1]
        cov[t, t] = T[t] @ cov[t - 1, t - 1] @ T[t].T + Q[t]
        for s in range(t):
            cov[t, s] = T[t] @ cov[t - 1, s]
            cov[s, t] = cov[t, s].T

    mean_y = np.array([d[r] + Z[r] @ mean_a[row_day[r]] for r in range(n_rows)])
    cov_yy = np.empty((n_rows, n_rows))
    for r in range(n_rows):
        for q in range(n_rows):
            cov_yy[r, q] = Z[r] @ cov[row_day[r], row_day[q]] @ Z[q]
        cov_yy[r, r] += h[r]
    cov_ay = np.zeros((n_days, m, n_rows))
    for t in range(n_days):
        for r in range(n_rows):
            cov_ay[t, :, r] = cov[t, row_day[r]] @ Z[r]

    def condition(t, rows):
        if len(rows) == 0:
            return mean_a[t].copy(), cov[t, t].copy()
        S = cov_yy[np.ix_(rows, rows)]
        c = cov_ay[t][:, rows]
        gain = np.linalg.solve(S, c.T).T
        mu = mean_a[t] + gain @ (y[rows] - mean_y[rows])
        V = cov[t, t] - gain @ c.T
        return mu, 0.5 * (V + V.T)

    filt_mean = np.empty((n_days, m))
    filt_cov = np.empty((n_days, m, m))
    sm_mean = np.empty((n_days, m))
    sm_cov = np.empty((n_days, m, m))
    all_rows = np.arange(n_rows)
    for t in range(n_days):
        upto = all_rows[row_day <= t]
        filt_mean[t], filt_cov[t] = condition(t, upto)
        sm_mean[t], sm_cov[t] = condition(t, all_rows)

    if n_rows == 0:
        loglik = 0.0
    else:
        sign, logdet = np.linalg.slogdet(cov_yy)
        resid = y - mean_y
        loglik = -0.5 * (n_rows * np.log(2 * np.pi) + logdet
                         + resid @ np.linalg.solve(cov_yy, resid))
    return {
        "filtered_mean": filt_mean,
        "filtered_cov": filt_cov,
        "smoothed_mean": sm_mean,
        "smoothed_cov": sm_cov,
        "log_likelihood": float(loglik),
    }


def random_instance(rng, max_days=20, max_dim=6):
    """A random stationary time-varying system with random missingness."""
    n_days = int(rng.integers(3, max_days + 1))
    m = int(rng.integers(1, max_dim + 1))

    T = np.zeros((n_days, m, m))
    Q = np.zeros((n_days, m, m))
    T[0] = np.eye(m)
    for t in range(1, n_days):
        A = rng.normal(size=(m, m))
        radius = max(np.abs(np.linalg.eigvals(A)).max(), 1e-6)
        T[t] = A * (rng.uniform(0.2, 0.95) / radius)
        B = rng.normal(size=(m, m))
        Q[t] = B @ B.T / m
    a0 = rng.normal(size=m)
    C = rng.normal(size=(m, m))
    P0 = C @ C.T / m + 0.1 * np.eye(m)

    row_day, Z, d, h, y = [], [], [], [], []
    for t in range(n_days):
        for _ in range(int(rng.integers(0, 3))):
            if rng.uniform() < 0.3:
                continue  # declared slot left unobserved
            row_day.append(t)
            Z.append(rng.normal(size=m))
            d.append(float(rng.normal()))
            h.append(float(rng.uniform(0.05, 2.0)))
            y.append(float(rng.normal()))
    if not row_day:
        row_day, Z = [n_days // 2], [rng.normal(size=m)]
        d, h, y = [0.0], [1.0], [float(rng.normal())]
    return (T, Q, a0, P0, np.array(row_day, dtype=np.int64), np.array(Z),
            np.array(d), np.array(h), np.array(y))


def weekly_toy_arrays(n_days=5, rho=0.9, lam=1.0, sigma=0.5, obs=((4, 0.7),)):
    """Daily AR(1) factor observed through weekly-style rows at given days."""
    T = np.zeros((n_days, 1, 1))
    Q = np.zeros((n_days, 1, 1))
    T[0, 0, 0] = 1.0
    T[1:, 0, 0] = rho
    Q[1:, 0, 0] = 1.0
    a0 = np.zeros(1)
    P0 = np.array([[1.0 / (1.0 - rho ** 2)]])
    row_day = np.array([t for t, _ in obs], dtype=np.int64)
    Z = np.full((len(obs), 1), lam)
    d = np.zeros(len(obs))
    h = np.full(len(obs), sigma ** 2)
    y = np.array([v for _, v in obs])
    return T, Q, a0, P0, row_day, Z, d, h, y


def daterange(start: dt.date, n: int) -> list[dt.date]:
    return [start + dt.timedelta(days=i) for i in range(n)]
