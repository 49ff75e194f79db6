"""Maximum-likelihood estimation over an unconstrained reparameterization.

AR coefficients map through partial autocorrelations (tanh) so every theta
is stationary by construction; standard deviations go through exp; loadings
and means are untouched.  The default optimizer is Nelder-Mead with restarts
from the incumbent best point; quasi-Newton with finite-difference gradients
is available as an option.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import kalman
from .errors import (BcIndexError, InitializationError, NumericalError,
                     OptimizerFailureError, ValidationError)
from .model import (DfmParams, DfmSpec, ErrorModel, ObservationSet, Scaling,
                    build_state_space, default_params, flip_sign, named_values,
                    param_names, transform_observations, with_value)

_PENALTY = 1.0e15


def pacf_to_ar(pacf: np.ndarray) -> np.ndarray:
    """Levinson-Durbin step-up from partial autocorrelations to AR coefficients."""
    y: list[float] = []
    for k, r in enumerate(pacf):
        y = [y[i] - r * y[k - 1 - i] for i in range(k)] + [float(r)]
    return np.array(y)


def ar_to_pacf(ar: np.ndarray) -> np.ndarray:
    """Inverse step-down; requires a stationary polynomial."""
    y = [float(a) for a in ar]
    p = len(y)
    pacf = np.empty(p)
    for k in range(p - 1, -1, -1):
        r = y[k]
        if not -1.0 < r < 1.0:
            raise ValidationError(f"AR coefficients {list(ar)} are not stationary")
        pacf[k] = r
        denom = 1.0 - r * r
        y = [(y[i] + r * y[k - 1 - i]) / denom for i in range(k)]
    return pacf


@dataclass(frozen=True)
class ParamTransform:
    """Bijection between DfmParams and an unconstrained real vector."""

    spec: DfmSpec
    names: tuple[str, ...]

    @classmethod
    def for_spec(cls, spec: DfmSpec) -> "ParamTransform":
        names = [f"factor_pacf.{i + 1}" for i in range(spec.factor_ar_order)]
        for ind in spec.indicators:
            names += [f"loading.{ind.id}", f"log_err_std.{ind.id}"]
            if ind.measurement_error == ErrorModel.AR1:
                names.append(f"err_pacf.{ind.id}")
            names.append(f"mean.{ind.id}")
        return cls(spec=spec, names=tuple(names))

    @property
    def size(self) -> int:
        return len(self.names)

    def to_vector(self, params: DfmParams) -> np.ndarray:
        theta = list(np.arctanh(ar_to_pacf(np.array(params.factor_ar))))
        for ind in self.spec.indicators:
            theta += [params.loading[ind.id], np.log(params.err_std[ind.id])]
            if ind.measurement_error == ErrorModel.AR1:
                theta.append(np.arctanh(params.err_ar[ind.id]))
            theta.append(params.mean[ind.id])
        return np.array(theta)

    def from_vector(self, theta: np.ndarray) -> DfmParams:
        p = self.spec.factor_ar_order
        it = iter(theta[p:])
        loading, err_std, err_ar, mean = {}, {}, {}, {}
        for ind in self.spec.indicators:
            loading[ind.id] = float(next(it))
            err_std[ind.id] = float(np.exp(next(it)))
            if ind.measurement_error == ErrorModel.AR1:
                err_ar[ind.id] = float(np.tanh(next(it)))
            else:
                err_ar[ind.id] = 0.0
            mean[ind.id] = float(next(it))
        return DfmParams(
            factor_ar=tuple(pacf_to_ar(np.tanh(theta[:p]))),
            loading=loading,
            err_std=err_std,
            err_ar=err_ar,
            mean=mean,
        )


@dataclass
class EstimateOptions:
    optimizer: str = "simplex"  # "simplex" or "quasi-newton"
    max_iter: int = 2000
    tol: float = 1e-8
    seed: int = 0
    max_restarts: int = 20

    def __post_init__(self):
        if self.optimizer not in ("simplex", "quasi-newton"):
            raise ValidationError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class EstimationReport:
    params: DfmParams
    log_likelihood: float
    iterations: int
    converged: bool
    trace: list[tuple[np.ndarray, float]] = field(repr=False)
    scaling: Scaling
    initial_log_likelihood: float


def _objective(spec, transform, slots, values, trace):
    def negll(theta):
        try:
            params = transform.from_vector(theta)
            system = build_state_space(spec, params)
            ll = kalman.log_likelihood_rows(system, slots, values)
        except (BcIndexError, FloatingPointError, OverflowError):
            return _PENALTY
        if not np.isfinite(ll):
            return _PENALTY
        if not trace or ll > trace[-1][1]:
            trace.append((theta.copy(), ll))
        return -ll

    return negll


def estimate_mle(spec: DfmSpec, observations: ObservationSet,
                 init: DfmParams | None = None,
                 options: EstimateOptions | None = None) -> EstimationReport:
    """Fit DfmParams to raw observations by pseudo-likelihood maximization.

    Observations go through the per-indicator ingestion transform and are
    standardized with their own sample moments (returned as the report's
    scaling, which downstream extraction must reuse).  The global sign is
    resolved so the loading on ``spec.sign_reference`` (or the first
    indicator) comes out positive.
    """
    opts = options or EstimateOptions()
    init = init or default_params(spec)
    init.validate(spec)

    obs_t = transform_observations(spec, observations)
    scaling = Scaling.fit(spec, obs_t)
    std_obs = scaling.apply(obs_t)

    transform = ParamTransform.for_spec(spec)
    theta0 = transform.to_vector(init)
    base_system = build_state_space(spec, init)
    slots, values = kalman.match_rows(base_system, std_obs)

    trace: list[tuple[np.ndarray, float]] = []
    negll = _objective(spec, transform, slots, values, trace)

    f0 = negll(theta0)
    if f0 >= _PENALTY:
        raise InitializationError("log-likelihood is not finite at the initial parameters")
    ll0 = -f0

    best_theta, best_ll = theta0.copy(), ll0
    iterations = 0
    converged = False
    rng = np.random.default_rng(opts.seed)

    if opts.optimizer == "quasi-newton":
        res = minimize(negll, theta0, method="BFGS",
                       options={"maxiter": opts.max_iter, "gtol": 1e-6})
        iterations = int(res.nit)
        if np.isfinite(res.fun) and -res.fun > best_ll:
            best_theta, best_ll = res.x.copy(), -res.fun
        # status 2 is line-search precision loss, the usual stop at an optimum
        # when gradients are finite-difference approximations
        converged = np.isfinite(res.fun) and (bool(res.success) or res.status == 2)
    else:
        # short restart cycles beat one long simplex run: a fresh simplex at
        # the incumbent best re-expands the search after collapse
        cycle = 50 * transform.size
        for restart in range(opts.max_restarts):
            remaining = opts.max_iter - iterations
            if remaining <= 0:
                break
            x0 = best_theta
            if restart >= 1:
                x0 = best_theta + 1e-4 * (1.0 + np.abs(best_theta)) * rng.standard_normal(transform.size)
            res = minimize(negll, x0, method="Nelder-Mead",
                           options={"maxiter": min(cycle, remaining), "xatol": 1e-6,
                                    "fatol": max(1e-10, 0.1 * opts.tol * max(1.0, abs(best_ll))),
                                    "disp": False})
            iterations += int(res.nit)
            new_ll = -res.fun if np.isfinite(res.fun) else -np.inf
            improvement = new_ll - best_ll
            if improvement > 0:
                best_theta, best_ll = res.x.copy(), new_ll
            if improvement < opts.tol * max(1.0, abs(best_ll)):
                converged = True
                break

    if not converged and best_ll <= ll0:
        raise OptimizerFailureError("optimizer made no progress from the initial point",
                                    trace=trace)

    params_hat = transform.from_vector(best_theta)
    ref = spec.sign_reference or spec.indicators[0].id
    if params_hat.loading[ref] < 0:
        params_hat = flip_sign(params_hat)
    params_hat.validate(spec)
    assert best_ll >= ll0 - 1e-9
    return EstimationReport(
        params=params_hat,
        log_likelihood=float(best_ll),
        iterations=iterations,
        converged=converged,
        trace=trace,
        scaling=scaling,
        initial_log_likelihood=float(ll0),
    )


def profile_likelihood(spec: DfmSpec, observations: ObservationSet, params: DfmParams,
                       coordinate: str, grid) -> list[tuple[float, float]]:
    """Log-likelihood along a grid for one named parameter, others held fixed."""
    if coordinate not in param_names(spec):
        raise ValidationError(f"unknown parameter coordinate {coordinate!r}")
    obs_t = transform_observations(spec, observations)
    std_obs = Scaling.fit(spec, obs_t).apply(obs_t)
    out = []
    for value in grid:
        p = with_value(spec, params, coordinate, float(value))
        p.validate(spec)
        system = build_state_space(spec, p)
        out.append((float(value), kalman.log_likelihood(system, std_obs)))
    return out


def _hessian(f, x: np.ndarray, rel_step: float = 1e-4) -> np.ndarray:
    n = len(x)
    h = rel_step * (1.0 + np.abs(x))
    H = np.empty((n, n))
    f0 = f(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        H[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / h[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4.0 * h[i] * h[j])
    return H


def standard_errors(spec: DfmSpec, observations: ObservationSet,
                    report: EstimationReport) -> dict[str, float]:
    """Delta-method standard errors from the numerical Hessian at the MLE.

    Keys follow ``param_names(spec)``; reuses the report's scaling so the
    likelihood surface is the one that was maximized.
    """
    transform = ParamTransform.for_spec(spec)
    theta_hat = transform.to_vector(report.params)

    obs_t = transform_observations(spec, observations)
    std_obs = report.scaling.apply(obs_t)
    base_system = build_state_space(spec, report.params)
    slots, values = kalman.match_rows(base_system, std_obs)
    negll = _objective(spec, transform, slots, values, [])

    H = _hessian(negll, theta_hat)
    H = 0.5 * (H + H.T)
    # flat or indefinite directions carry (near-)zero information: floor the
    # eigenvalues so their variance comes out huge rather than zero
    eigval, eigvec = np.linalg.eigh(H)
    floor = 1e-10 * max(float(np.abs(eigval).max()), 1.0)
    eigval = np.maximum(eigval, floor)
    cov_theta = (eigvec / eigval) @ eigvec.T

    names = param_names(spec)

    def pvec(theta):
        vals = named_values(spec, transform.from_vector(theta))
        return np.array([vals[k] for k in names])

    n_theta = len(theta_hat)
    step = 1e-6 * (1.0 + np.abs(theta_hat))
    J = np.empty((len(names), n_theta))
    for j in range(n_theta):
        e = np.zeros(n_theta)
        e[j] = step[j]
        J[:, j] = (pvec(theta_hat + e) - pvec(theta_hat - e)) / (2.0 * step[j])
    var = np.einsum("ij,jk,ik->i", J, cov_theta, J)
    return {name: float(np.sqrt(max(v, 0.0))) for name, v in zip(names, var)}
