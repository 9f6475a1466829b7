"""Kalman filter for the linear-Gaussian GUM, used as a validation oracle.

The filter runs on the GUM state equation ``h_t = a h_{t-1} + c x_{t-1} + u_t``,
in which the previous observation enters as a known input.  Its predictive
factors give the exact log-likelihood, and its innovations should be white
on data drawn from the model.  In the stationary regime the innovation
variance converges to ``r0 - H P_min H^T``, the ``R`` block at the minimal
element of the admissible set.
"""
from dataclasses import dataclass

import numpy as np

from . import _linalg as la
from . import stochastic as sr
from .errors import DegenerateInnovation
from .model import ModelFamily, simulate
from .realization import RealizationTriplet

INNOVATION_FLOOR = 1e-12


@dataclass(frozen=True)
class FilterState:
    """Filtered mean and covariance after the last observation.

    ``innovations`` is a (T+1, 2) array of (innovation, predicted variance).
    """

    mean: np.ndarray
    covariance: np.ndarray
    loglik: float
    innovations: np.ndarray

    @property
    def standardized(self):
        return self.innovations[:, 0] / np.sqrt(self.innovations[:, 1])


def kalman_filter(params, observations, family=None):
    """Predict/update recursion with a Joseph-form covariance update.

    For the RNN family the start is ``h_0 = 0`` with ``x_0 ~ N(0, r0)``;
    otherwise ``h_0 ~ N(0, eta)``.  Raises DegenerateInnovation when a
    predicted variance drops to ``1e-12 (1 + r0)`` or below.
    """
    x = np.asarray(observations, dtype=float).reshape(-1)
    n = params.n
    a, b, c = params.a, params.b, params.c
    beta = params.beta
    floor = INNOVATION_FLOOR * (1.0 + params.r0)
    eye = np.eye(n)
    innov = np.empty((x.size, 2))
    loglik = 0.0
    m = np.zeros((n, 1))
    P = params.eta.copy()
    start = 0
    rnn = family is not None and ModelFamily(family) is ModelFamily.RNN
    if rnn and x.size:
        s = params.r0
        if s <= floor:
            raise DegenerateInnovation(f"initial variance {s:.3e}")
        innov[0] = x[0], s
        loglik -= 0.5 * (np.log(2 * np.pi * s) + x[0] ** 2 / s)
        m = c * x[0]
        P = params.alpha.copy()
        start = 1
    for t in range(start, x.size):
        s = (b @ P @ b.T).item() + beta
        if s <= floor:
            raise DegenerateInnovation(f"predicted variance {s:.3e} at t={t}")
        e = x[t] - (b @ m).item()
        innov[t] = e, s
        loglik -= 0.5 * (np.log(2 * np.pi * s) + e * e / s)
        gain = P @ b.T / s
        m = m + gain * e
        J = eye - gain @ b
        P = la.sym(J @ P @ J.T + beta * (gain @ gain.T))
        if t + 1 < x.size:
            m = a @ m + c * x[t]
            P = la.sym(a @ P @ a.T + params.alpha)
    return FilterState(m[:, 0], P, float(loglik), innov)


def innovation_autocorrelation(state, max_lag=5):
    """Sample autocorrelation of the standardized innovations at lags 1..max_lag."""
    z = state.standardized
    denom = float(z @ z)
    return np.array([float(z[:-k] @ z[k:]) / denom for k in range(1, max_lag + 1)])


def whiteness_check(state, max_lag=5, k_sigma=3.0):
    """``|autocorrelation| < k_sigma / sqrt(T)`` at every lag ``1..max_lag``."""
    ac = innovation_autocorrelation(state, max_lag)
    bound = k_sigma / np.sqrt(state.innovations.shape[0])
    return {"lags": list(range(1, max_lag + 1)), "autocorrelation": ac,
            "bound": float(bound), "white": bool(np.all(np.abs(ac) < bound))}


def steady_state_innovation_variance(params):
    """``r0 - H P_min H^T`` for the direct realization of ``params``."""
    if params.n == 0:
        return params.r0
    triplet = RealizationTriplet.from_params(params)
    P_min, _ = sr.compute_extremal_P(triplet, params.r0)
    return sr.extract_noise(triplet, params.r0, P_min, strict=False).R


@dataclass(frozen=True)
class ValidationReport:
    T: int
    seed: int
    loglik: float
    final_innovation_variance: float
    steady_state_R: float
    steady_state_error: float
    whiteness: dict

    @property
    def ok(self):
        return self.whiteness["white"] and self.steady_state_error <= 1e-6


def validate(params, family=ModelFamily.GUM, T=1000, seed=0, max_lag=5):
    """Simulate, filter and compare against the stochastic-realization prediction.

    The reference is ``r0 - H P_min H^T`` except for the RNN family, whose
    filter tracks the state exactly and settles at ``beta``.
    """
    family = ModelFamily(family)
    traj = simulate(params, family, T, seed)
    state = kalman_filter(params, traj.observations, family)
    if family is ModelFamily.RNN:
        # x_0 pins the state down exactly, so every later innovation has
        # variance beta; this is R at P = eta, which may be P_max
        R = params.beta
    else:
        R = steady_state_innovation_variance(params)
    s_final = float(state.innovations[-1, 1])
    return ValidationReport(int(T), seed, state.loglik, s_final, float(R),
                            abs(s_final - R), whiteness_check(state, max_lag))
