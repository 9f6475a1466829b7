"""Linear-Gaussian generative unified model (GUM) and its sub-families.

The model is

    h_0 ~ N(0, eta)
    h_t = a h_{t-1} + c x_{t-1} + u_t,   u_t ~ N(0, alpha)
    x_t = b h_t + v_t,                   v_t ~ N(0, beta)

with an n-dimensional latent ``h_t`` and a scalar observation ``x_t``.  The
HMC, D-GUM and RNN families are the constrained cases ``c = 0``,
``alpha = 0`` and ``alpha = 0, eta = c Var(x_0) c^T, h_0 = 0``.
"""
import enum
from dataclasses import dataclass

import numpy as np

from . import _linalg as la
from .errors import EmptyInput, FamilyViolation, NotStationary


class ModelFamily(str, enum.Enum):
    GUM = "GUM"
    HMC = "HMC"
    DGUM = "DGUM"
    RNN = "RNN"


def _frozen(x):
    x = np.array(x, dtype=float)
    x.setflags(write=False)
    return x


@dataclass(frozen=True)
class GumParameters:
    """Parameters ``(a, b, c, alpha, beta, eta)`` of a linear-Gaussian GUM.

    Matrices are stored with explicit shapes: ``a`` (n, n), ``b`` (1, n),
    ``c`` (n, 1), ``alpha`` and ``eta`` (n, n).  Flat inputs for ``b`` and
    ``c`` are reshaped.  ``n = 0`` is allowed and describes white noise of
    variance ``beta``.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    alpha: np.ndarray
    beta: float
    eta: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        n = a.shape[0] if a.size else 0
        a = a.reshape(n, n)
        b = np.asarray(self.b, dtype=float).reshape(1, n)
        c = np.asarray(self.c, dtype=float).reshape(n, 1)
        alpha = np.asarray(self.alpha, dtype=float).reshape(n, n)
        eta = np.asarray(self.eta, dtype=float).reshape(n, n)
        beta = float(self.beta)
        if beta < 0:
            raise ValueError(f"beta must be nonnegative, got {beta}")
        for name, m in (("alpha", alpha), ("eta", eta)):
            if not np.allclose(m, m.T, rtol=0, atol=la.PSD_TOL * (1 + np.abs(m).max(initial=0))):
                raise ValueError(f"{name} is not symmetric")
            if not la.is_psd(m):
                raise ValueError(f"{name} is not positive semi-definite")
        for name, m in (("a", a), ("b", b), ("c", c), ("alpha", la.sym(alpha)),
                        ("eta", la.sym(eta))):
            object.__setattr__(self, name, _frozen(m))
        object.__setattr__(self, "beta", beta)

    @property
    def n(self):
        return self.a.shape[0]

    @classmethod
    def with_stationary_eta(cls, a, b, c, alpha, beta):
        """Build parameters whose ``eta`` solves the stationary Lyapunov equation."""
        eta = solve_stationary_eta(a, b, c, alpha, beta)
        return cls(a, b, c, alpha, beta, eta)

    def replace(self, **changes):
        fields = dict(a=self.a, b=self.b, c=self.c, alpha=self.alpha,
                      beta=self.beta, eta=self.eta)
        fields.update(changes)
        return GumParameters(**fields)

    @property
    def r0(self):
        return float(self.beta + (self.b @ self.eta @ self.b.T).item()) if self.n else self.beta


@dataclass(frozen=True)
class CovarianceSeries:
    """Stationary covariance ``r0`` and lags ``[r_1, ..., r_K]``.

    Only ``r0 >= 0`` is enforced; the Cauchy-Schwarz bound ``|r_k| <= r0``
    holds for genuine covariance series but classification must also accept
    series that violate it, see :meth:`cauchy_schwarz_ok`.
    """

    r0: float
    lags: np.ndarray

    def __post_init__(self):
        r0 = float(self.r0)
        if not np.isfinite(r0) or r0 < 0:
            raise ValueError(f"r0 must be finite and nonnegative, got {r0}")
        lags = np.asarray(self.lags, dtype=float).reshape(-1)
        if not np.all(np.isfinite(lags)):
            raise ValueError("lags must be finite")
        object.__setattr__(self, "r0", r0)
        object.__setattr__(self, "lags", _frozen(lags))

    @property
    def K(self):
        return self.lags.shape[0]

    def values(self):
        """Array ``[r_0, r_1, ..., r_K]``."""
        return np.concatenate([[self.r0], self.lags])

    def cauchy_schwarz_ok(self, tol=la.PSD_TOL):
        return bool(np.all(np.abs(self.lags) <= self.r0 * (1 + tol) + tol))


@dataclass(frozen=True)
class Trajectory:
    observations: np.ndarray
    latents: np.ndarray
    seed: int = None

    def __post_init__(self):
        if self.observations.shape[0] != self.latents.shape[0]:
            raise ValueError("observations and latents must have equal length")

    @property
    def T(self):
        return self.observations.shape[0] - 1


@dataclass(frozen=True)
class StationarityDiagnostics:
    spectral_radius: float
    lyapunov_residual: float
    stable: bool
    lyapunov_ok: bool

    @property
    def stationary(self):
        return self.stable and self.lyapunov_ok

    @property
    def asymptotically_stationary(self):
        # a stable F drives eta_t to the Lyapunov solution from any start
        return self.stable


def closed_loop_matrix(params):
    """``F = a + c b``, the transition seen by the marginal covariance."""
    return params.a + params.c @ params.b


def lyapunov_residual(params):
    f = closed_loop_matrix(params)
    w = params.alpha + params.beta * (params.c @ params.c.T)
    res = params.eta - w - f @ params.eta @ f.T
    return float(np.abs(res).max(initial=0.0))


def stationarity_diagnostics(params, tol=la.PSD_TOL, margin=la.STABILITY_MARGIN):
    rho = la.spectral_radius(closed_loop_matrix(params))
    res = lyapunov_residual(params)
    scale = 1.0 + float(np.abs(params.eta).max(initial=0.0))
    return StationarityDiagnostics(
        spectral_radius=rho,
        lyapunov_residual=res,
        stable=rho < 1.0 - margin,
        lyapunov_ok=res < tol * scale,
    )


def is_stationary(params, tol=la.PSD_TOL, margin=la.STABILITY_MARGIN):
    """True iff ``a + cb`` is strictly stable and ``eta`` solves the Lyapunov equation.

    The residual test is relative: ``||residual||_max < tol * (1 + ||eta||_max)``.
    """
    return stationarity_diagnostics(params, tol, margin).stationary


def solve_stationary_eta(a, b, c, alpha, beta, tol=la.PSD_TOL):
    """Unique ``eta = (alpha + c beta c^T) + F eta F^T`` with ``F = a + cb``.

    Raises NotStable if ``F`` has spectral radius >= 1 and NotPSD if the
    solution has an eigenvalue below ``-tol (1 + ||eta||)``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    n = a.shape[0] if a.size else 0
    a = a.reshape(n, n)
    b = np.asarray(b, dtype=float).reshape(1, n)
    c = np.asarray(c, dtype=float).reshape(n, 1)
    alpha = np.asarray(alpha, dtype=float).reshape(n, n)
    w = alpha + float(beta) * (c @ c.T)
    eta = la.solve_lyapunov(a + c @ b, w)
    return la.project_psd(eta, tol, name="eta")


def analytic_covariance(params, K, check=True):
    """Covariance series ``r0 = beta + b eta b^T``, ``r_k = b F^(k-1) N``.

    ``N = a eta b^T + c r0``; lags are generated by repeated matrix-vector
    products.
    """
    if check and not is_stationary(params):
        raise NotStationary("parameters are not stationary")
    r0 = params.r0
    lags = np.zeros(int(K))
    if params.n == 0:
        return CovarianceSeries(r0, lags)
    f = closed_loop_matrix(params)
    v = params.a @ params.eta @ params.b.T + params.c * r0
    for k in range(int(K)):
        lags[k] = (params.b @ v).item()
        v = f @ v
    return CovarianceSeries(r0, lags)


def family_violations(params, family, tol=la.PSD_TOL):
    """List the family constraints that ``params`` breaks (empty if none)."""
    family = ModelFamily(family)
    out = []
    scale = 1.0 + max(np.abs(params.a).max(initial=0), np.abs(params.eta).max(initial=0))
    if family is ModelFamily.HMC and np.abs(params.c).max(initial=0) > tol * scale:
        out.append("HMC requires c = 0")
    if family in (ModelFamily.DGUM, ModelFamily.RNN):
        if np.abs(params.alpha).max(initial=0) > tol * scale:
            out.append(f"{family.value} requires alpha = 0")
    if family is ModelFamily.RNN:
        target = params.r0 * (params.c @ params.c.T)
        if np.abs(params.eta - target).max(initial=0) > tol * scale:
            out.append("RNN requires eta = c (beta + b eta b^T) c^T")
    return out


def check_family(params, family, tol=la.PSD_TOL):
    bad = family_violations(params, family, tol)
    if bad:
        raise FamilyViolation("; ".join(bad))


def simulate_many(params, family, T, count, seed):
    """Draw ``count`` independent trajectories ``x_0:T`` in one vectorized pass.

    Gaussian vectors with covariance ``M`` are produced as ``L z`` with
    ``z`` standard normal and ``L`` the symmetric square root of ``M``.  All
    draws come from ``numpy.random.default_rng(seed)`` in a fixed order
    (initial state, state noise, observation noise), so results are
    reproducible for a given numpy version.

    For the RNN family ``h_0 = 0`` and ``x_0 ~ N(0, r0)`` independently of
    ``h_0``; the recursion then starts from ``h_1 = c x_0``.
    """
    family = ModelFamily(family)
    check_family(params, family)
    T = int(T)
    count = int(count)
    if T < 0 or count < 1:
        raise ValueError("need T >= 0 and count >= 1")
    n = params.n
    rng = np.random.default_rng(seed)
    z0 = rng.standard_normal((count, n))
    zu = rng.standard_normal((T, count, n))
    zv = rng.standard_normal((T + 1, count))

    l_eta = la.psd_sqrt(params.eta)
    l_alpha = la.psd_sqrt(params.alpha)
    sd_beta = np.sqrt(params.beta)
    a, b, c = params.a, params.b[0], params.c[:, 0]

    h = np.zeros((T + 1, count, n))
    x = np.zeros((T + 1, count))
    if family is ModelFamily.RNN:
        x[0] = np.sqrt(params.r0) * zv[0]
    else:
        h[0] = z0 @ l_eta.T
        x[0] = h[0] @ b + sd_beta * zv[0]
    for t in range(1, T + 1):
        h[t] = h[t - 1] @ a.T + np.outer(x[t - 1], c) + zu[t - 1] @ l_alpha.T
        x[t] = h[t] @ b + sd_beta * zv[t]
    return [Trajectory(x[:, m].copy(), h[:, m, :].copy(), seed) for m in range(count)]


def simulate(params, family, T, seed):
    """Single trajectory; identical to the first draw of :func:`simulate_many`."""
    return simulate_many(params, family, T, 1, seed)[0]


def _as_observation_matrix(trajectories):
    if isinstance(trajectories, np.ndarray):
        x = np.atleast_2d(trajectories)
    else:
        trajectories = list(trajectories)
        if not trajectories:
            raise EmptyInput("no trajectories given")
        lengths = {len(tr.observations) for tr in trajectories}
        if len(lengths) != 1:
            raise ValueError("trajectories must have equal length")
        x = np.stack([tr.observations for tr in trajectories])
    if x.size == 0:
        raise EmptyInput("no observations given")
    return x


def empirical_covariance(trajectories, K):
    """Lag-k sample covariances averaged over time and trajectories.

    The model is zero-mean, so no centering is applied.  Returns the series
    and a per-lag standard error (``std across trajectories / sqrt(M)``,
    NaN for a single trajectory) for lags ``0..K``.
    """
    x = _as_observation_matrix(trajectories)
    m, length = x.shape
    K = int(K)
    if length < K + 1:
        raise ValueError(f"trajectories of length {length} are too short for K={K}")
    per = np.empty((m, K + 1))
    for k in range(K + 1):
        per[:, k] = np.mean(x[:, : length - k] * x[:, k:], axis=1)
    mean = per.mean(axis=0)
    if m > 1:
        se = per.std(axis=0, ddof=1) / np.sqrt(m)
    else:
        se = np.full(K + 1, np.nan)
    return CovarianceSeries(max(mean[0], 0.0), mean[1:]), se


def _random_stable_matrix(rng, n, radius):
    lo, hi = radius
    eigs = []
    while len(eigs) < n:
        lam = rng.uniform(lo, hi) * rng.choice([-1.0, 1.0])
        if all(abs(lam - e) >= 0.1 for e in eigs):
            eigs.append(lam)
    q1, _ = np.linalg.qr(rng.standard_normal((n, n)))
    q2, _ = np.linalg.qr(rng.standard_normal((n, n)))
    v = q1 @ np.diag(rng.uniform(0.6, 1.6, n)) @ q2
    return v @ np.diag(eigs) @ np.linalg.inv(v)


def random_gum(rng, n, family=ModelFamily.GUM, radius=(0.3, 0.85)):
    """Sample a stationary model of the given family with a generic minimal realization.

    The closed-loop matrix has real, distinct eigenvalues of magnitude in
    ``radius`` separated by at least 0.1, which keeps the Hankel matrices of
    the resulting covariance series well conditioned.  RNN models exist only
    for ``n = 1`` here (``a = 0`` or ``a = -2cb``, the two stationary cases).
    """
    family = ModelFamily(family)
    beta = rng.uniform(0.3, 1.2)
    if family is ModelFamily.RNN:
        if n != 1:
            raise ValueError("random RNN models are only generated for n = 1")
        b = rng.uniform(0.5, 1.5) * rng.choice([-1.0, 1.0])
        f = rng.uniform(*radius) * rng.choice([-1.0, 1.0])
        if rng.random() < 0.5:
            c, a = f / b, 0.0
        else:
            c, a = -f / b, 2 * f
        eta = c * c * beta / (1.0 - (b * c) ** 2)
        return GumParameters([[a]], [[b]], [[c]], [[0.0]], beta, [[eta]])

    f = _random_stable_matrix(rng, n, radius)
    b = rng.standard_normal((1, n))
    b /= np.linalg.norm(b)
    if family is ModelFamily.HMC:
        c = np.zeros((n, 1))
    else:
        c = 0.4 * rng.standard_normal((n, 1))
    a = f - c @ b
    if family is ModelFamily.DGUM:
        alpha = np.zeros((n, n))
    else:
        g = rng.standard_normal((n, n))
        alpha = g @ g.T / n + 0.2 * np.eye(n)
    return GumParameters.with_stationary_eta(a, b, c, alpha, beta)
