"""Stochastic realization: the solution set of state covariances ``P``.

Given a triplet ``(H, F, N)`` and ``r0`` a matrix ``P`` is admissible when

    [[P, N], [N^T, r0]] - [F; H] P [F^T, H^T] = [[Q, S], [S^T, R]] >= 0,  P > 0.

The admissible set is convex and bounded with a minimum and a maximum.  The
minimum is the limit of the Riccati recursion

    P_{k+1} = F P_k F^T + (N - F P_k H^T)(r0 - H P_k H^T)^{-1}(N - F P_k H^T)^T

from ``P_0 = 0``; the maximum is the inverse of the minimum for the dual
triplet ``(N^T, F^T, H^T)``.  The recursion is accelerated by doubling: the
structure-preserving doubling algorithm produces the iterates ``P_{2^k}``
of the same sequence, so the limit and the monotone path are unchanged.
"""
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import toeplitz

from . import _linalg as la
from .errors import Infeasible, NoConvergence, NotPositiveReal, NotScalar

RICCATI_TOL = 1e-12
FIXED_POINT_MAX_ITER = 10000
DOUBLING_MAX_STEPS = 64
STALL_TOL = 1e-7


@dataclass(frozen=True)
class NoiseCovariances:
    P: np.ndarray
    Q: np.ndarray
    R: float
    S: np.ndarray

    def block(self):
        n = self.P.shape[0]
        out = np.zeros((n + 1, n + 1))
        out[:n, :n] = self.Q
        out[:n, n:] = self.S
        out[n:, :n] = self.S.T
        out[n, n] = self.R
        return out


@dataclass(frozen=True)
class SolutionSetSummary:
    feasible: bool
    P_min: np.ndarray = None
    P_max: np.ndarray = None
    scalar_interval: tuple = None
    strict: bool = None
    diagnostics: dict = field(default_factory=dict)


class PositiveRealCheck(NamedTuple):
    ok: bool
    P_min: np.ndarray
    reason: str


def _swap(m):
    return np.swapaxes(m, -1, -2)


def _residual_stack(H, F, N, r0, P):
    n = F.shape[-1]
    B = F.shape[0]
    out = np.empty((B, n + 1, n + 1))
    FP = F @ P
    out[:, :n, :n] = P - FP @ _swap(F)
    S = N - FP @ _swap(H)
    out[:, :n, n:] = S
    out[:, n:, :n] = _swap(S)
    out[:, n, n] = r0 - (H @ P @ _swap(H))[:, 0, 0]
    return la.sym(out)


def _feasible_stack(H, F, N, r0, P, tol=la.PSD_TOL, tol_strict=la.STRICT_TOL, strict=True):
    res = _residual_stack(H, F, N, r0, P)
    ok = la.min_eig(res) >= la.psd_floor(res, tol)
    if F.shape[-1]:
        p_min = la.min_eig(P)
        ok &= (p_min > tol_strict) if strict else (p_min >= la.psd_floor(P, tol))
    return ok


def _riccati_map_stack(H, F, N, r0, P):
    S = N - F @ P @ _swap(H)
    R = r0 - (H @ P @ _swap(H))[:, 0, 0]
    return F @ P @ _swap(F) + S @ _swap(S) / R[:, None, None], R


def _riccati_min_stack(H, F, N, r0, tol=RICCATI_TOL, max_steps=DOUBLING_MAX_STEPS,
                       method="doubling"):
    """Limit of the forward Riccati recursion from 0, for a batch of triplets.

    Returns ``(P, converged, failed, steps)``.  ``failed`` marks items for
    which ``r0 - H P H^T`` stopped being positive or the iterates blew up,
    which is evidence against positive realness.
    """
    B, n = F.shape[0], F.shape[-1]
    r0 = np.asarray(r0, dtype=float).reshape(B)
    converged = np.zeros(B, bool)
    failed = r0 <= 0
    if n == 0:
        return np.zeros((B, 0, 0)), np.ones(B, bool), failed, 0
    r0b = np.where(failed, 1.0, r0)[:, None, None]
    eye = np.eye(n)
    with np.errstate(all="ignore"):
        if method == "fixed_point":
            X = np.zeros((B, n, n))
            steps = 0
            for steps in range(1, max_steps + 1):
                Xn, R = _riccati_map_stack(H, F, N, r0b[:, 0, 0], X)
                bad = ~(R > 0) | ~np.isfinite(Xn).all(axis=(1, 2))
                failed |= bad & ~converged
                active = ~(converged | failed)
                delta = np.abs(Xn - X).max(axis=(1, 2))
                X = np.where(active[:, None, None], Xn, X)
                converged |= active & (delta <= tol * (1.0 + np.abs(Xn).max(axis=(1, 2))))
                if (converged | failed).all():
                    break
            return la.sym(X), converged, failed, steps

        A = _swap(F - N @ H / r0b)
        G = -_swap(H) @ H / r0b
        X = N @ _swap(N) / r0b
        last = np.full(B, np.inf)
        stalled = np.zeros(B, bool)
        steps = 0
        for steps in range(1, max_steps + 1):
            W = eye + G @ X
            det = np.linalg.det(W)
            rem = r0b[:, 0, 0] - (H @ X @ _swap(H))[:, 0, 0]
            bad = ~(rem > 0) | ~np.isfinite(X).all(axis=(1, 2))
            failed |= bad & ~converged
            # W turns singular on the boundary of positive realness, where the
            # recursion converges only sublinearly; keep the last iterate if it
            # had settled and let the feasibility check decide.
            stall = ~(det > 1e-14) & ~(converged | failed)
            settled = last <= STALL_TOL * (1.0 + np.abs(X).max(axis=(1, 2)))
            stalled |= stall & settled
            failed |= stall & ~settled
            converged |= stall & settled
            active = ~(converged | failed)
            W = np.where(active[:, None, None], W, eye)
            Winv = np.linalg.inv(W)
            An = A @ Winv @ A
            Gn = G + A @ Winv @ G @ _swap(A)
            Xn = X + _swap(A) @ X @ Winv @ A
            delta = np.abs(Xn - X).max(axis=(1, 2))
            last = np.where(active, delta, last)
            keep = active[:, None, None]
            A = np.where(keep, An, A)
            G = np.where(keep, Gn, G)
            X = np.where(keep, Xn, X)
            converged |= active & (delta <= tol * (1.0 + np.abs(Xn).max(axis=(1, 2))))
            if (converged | failed).all():
                break
        failed |= ~np.isfinite(X).all(axis=(1, 2))
    return la.sym(X), converged & ~failed, failed, steps


@dataclass
class _Extremal:
    P_min: np.ndarray
    P_max: np.ndarray
    ok: np.ndarray
    strict: np.ndarray
    reason: list
    steps: int


def _extremal_stack(H, F, N, r0, tol=RICCATI_TOL, max_steps=None, method="doubling",
                    psd_tol=la.PSD_TOL):
    if max_steps is None:
        max_steps = DOUBLING_MAX_STEPS if method == "doubling" else FIXED_POINT_MAX_ITER
    B, n = F.shape[0], F.shape[-1]
    r0 = np.asarray(r0, dtype=float).reshape(B)
    reason = [""] * B
    if n == 0:
        ok = r0 >= 0
        empty = np.zeros((B, 0, 0))
        return _Extremal(empty, empty, ok, np.ones(B, bool),
                         ["" if o else "negative r0" for o in ok], 0)

    rho = np.abs(np.linalg.eigvals(F)).max(axis=1)
    stable = rho < 1.0 - la.STABILITY_MARGIN
    P_min, conv, fail, steps = _riccati_min_stack(H, F, N, r0, tol, max_steps, method)
    Pbar, conv_d, fail_d, steps_d = _riccati_min_stack(_swap(N), _swap(F), _swap(H), r0,
                                                       tol, max_steps, method)
    feasible = _feasible_stack(H, F, N, r0, P_min, psd_tol, strict=False)
    ok = stable & conv & ~fail & feasible

    P_max = np.full((B, n, n), np.nan)
    invertible = conv_d & ~fail_d & (la.min_eig(Pbar) > la.STRICT_TOL * (1 + la.sym_norm(Pbar)))
    if invertible.any():
        P_max[invertible] = la.sym(np.linalg.inv(Pbar[invertible]))
    strict = la.min_eig(P_min) > la.STRICT_TOL

    for i in range(B):
        if not stable[i]:
            reason[i] = f"F has spectral radius {rho[i]:.6g} >= 1"
        elif fail[i]:
            reason[i] = "Riccati iteration left the region r0 - H P H^T > 0"
        elif not conv[i]:
            reason[i] = "no_convergence"
        elif not feasible[i]:
            reason[i] = "Riccati limit violates the positivity constraints"
    return _Extremal(P_min, P_max, ok, strict, reason, max(steps, steps_d))


def _stack1(triplet):
    return triplet.H[None], triplet.F[None], triplet.N[None]


def residual_matrix(triplet, r0, P):
    """``[[P, N], [N^T, r0]] - [F; H] P [F^T, H^T]``, symmetrized."""
    P = np.asarray(P, dtype=float).reshape(triplet.n, triplet.n)
    return _residual_stack(*_stack1(triplet), np.array([float(r0)]), P[None])[0]


def is_feasible(triplet, r0, P, tol=la.PSD_TOL, tol_strict=la.STRICT_TOL, strict=True):
    """``P > 0`` (min eigenvalue above ``tol_strict``) and a PSD residual matrix.

    With ``strict=False`` the first condition relaxes to ``P >= 0``.
    """
    P = np.asarray(P, dtype=float).reshape(triplet.n, triplet.n)
    return bool(_feasible_stack(*_stack1(triplet), np.array([float(r0)]), P[None],
                                tol, tol_strict, strict)[0])


def extract_noise(triplet, r0, P, tol=la.PSD_TOL, strict=True):
    """Read ``(Q, S, R)`` off the residual matrix of an admissible ``P``."""
    P = np.asarray(P, dtype=float).reshape(triplet.n, triplet.n)
    if not is_feasible(triplet, r0, P, tol, strict=strict):
        raise Infeasible("P is not in the admissible set")
    res = residual_matrix(triplet, r0, P)
    n = triplet.n
    return NoiseCovariances(P=la.sym(P), Q=res[:n, :n], R=float(res[n, n]), S=res[:n, n:])


def riccati_residual(triplet, r0, P):
    """``P - F P F^T - (N - F P H^T)(r0 - H P H^T)^{-1}(N - F P H^T)^T``."""
    P = np.asarray(P, dtype=float).reshape(triplet.n, triplet.n)
    if triplet.n == 0:
        return np.zeros((0, 0))
    mapped, _ = _riccati_map_stack(*_stack1(triplet), np.array([float(r0)]), P[None])
    return la.sym(P - mapped[0])


def compute_extremal_P(triplet, r0, max_iter=None, tol=RICCATI_TOL, method="doubling"):
    """Minimum and maximum of the admissible set, ``(P_min, P_max)``.

    ``method="fixed_point"`` runs the plain recursion (``max_iter`` default
    10000); ``"doubling"`` runs doubling steps (default cap 64, i.e. up to
    2^64 plain steps).  Convergence is declared at a relative update below
    ``tol``.  ``P_max`` is None when the dual minimum is singular.

    Raises NotPositiveReal when the iteration leaves ``r0 - H P H^T > 0`` or
    its limit is not admissible, and NoConvergence otherwise.
    """
    ext = _extremal_stack(*_stack1(triplet), np.array([float(r0)]), tol, max_iter, method)
    if not ext.ok[0]:
        if ext.reason[0] == "no_convergence":
            raise NoConvergence(f"Riccati iteration did not converge in {ext.steps} steps")
        raise NotPositiveReal(ext.reason[0])
    P_max = ext.P_max[0]
    return ext.P_min[0], (None if np.isnan(P_max).any() else P_max)


def _as_scalar(x, name):
    a = np.asarray(x, dtype=float)
    if a.size != 1:
        raise NotScalar(f"{name} must be scalar, got shape {a.shape}")
    return float(a.reshape(()))


def _scalar_interval_stack(H, F, N, r0):
    """Vectorized closed-form interval; returns ``(P1, P2, nonempty)``."""
    H, F, N, r0 = (np.asarray(v, dtype=float) for v in (H, F, N, r0))
    lin = 2 * H * F * N + r0 * (1 - F * F)
    delta = (1 - F * F) * (r0 * (1 + F) - 2 * H * N) * (r0 * (1 - F) + 2 * H * N)
    scale = lin * lin + 4 * (H * N) ** 2
    nonempty = (np.abs(F) <= 1) & (delta >= -1e-13 * scale) & (H != 0)
    root = np.sqrt(np.clip(delta, 0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        P1 = (lin - root) / (2 * H * H)
        P2 = (lin + root) / (2 * H * H)
    return P1, P2, nonempty


def scalar_interval(H, F, N, r0):
    """Closed-form admissible interval ``[P1, P2]`` for an order-1 triplet, or None.

    ``P1, P2`` are the roots of ``-H^2 P^2 + [r0 (1 - F^2) + 2 H F N] P - N^2``;
    the interval is empty unless ``r0 (F - 1)/2 <= H N <= r0 (F + 1)/2``.
    """
    H, F, N, r0 = (_as_scalar(v, k) for v, k in ((H, "H"), (F, "F"), (N, "N"), (r0, "r0")))
    if H == 0:
        raise ValueError("H must be nonzero")
    P1, P2, ok = _scalar_interval_stack(H, F, N, r0)
    if not ok:
        return None
    return float(P1), float(P2)


def _toeplitz_min_eig_stack(values):
    m = values.shape[-1]
    idx = np.abs(np.subtract.outer(np.arange(m), np.arange(m)))
    return np.linalg.eigvalsh(values[..., idx])[..., 0]


def toeplitz_is_covariance(series, m=None, tol=la.PSD_TOL):
    """Is the (m+1)x(m+1) Toeplitz matrix of ``r_0..r_m`` PSD (min eig >= -tol r0)?"""
    m = series.K if m is None else int(m)
    if m > series.K:
        raise ValueError(f"m={m} exceeds the {series.K} available lags")
    T = toeplitz(series.values()[: m + 1])
    return bool(np.linalg.eigvalsh(T)[0] >= -tol * series.r0)


def positive_real_check(triplet, r0, method="doubling"):
    """Is ``r_k = H F^(k-1) N`` with variance ``r0`` a covariance series?

    Certified by an admissible ``P_min`` (which may sit on the ``P >= 0``
    boundary only in the degenerate ``N = 0`` case).
    """
    ext = _extremal_stack(*_stack1(triplet), np.array([float(r0)]), method=method)
    if ext.ok[0]:
        return PositiveRealCheck(True, ext.P_min[0], "")
    return PositiveRealCheck(False, None, ext.reason[0])


def summarize_solution_set(triplet, r0, method="doubling", tol=la.PSD_TOL):
    """Feasibility, extremal elements and (for n = 1) the closed-form interval."""
    r0 = float(r0)
    ext = _extremal_stack(*_stack1(triplet), np.array([r0]), method=method, psd_tol=tol)
    interval = None
    if triplet.n == 1 and triplet.H.item() != 0:
        interval = scalar_interval(triplet.H, triplet.F, triplet.N, r0)
    diag = {"doubling_steps" if method == "doubling" else "iterations": ext.steps}
    if not ext.ok[0]:
        diag["reason"] = ext.reason[0]
        return SolutionSetSummary(False, scalar_interval=interval, diagnostics=diag)
    P_min = ext.P_min[0]
    P_max = None if np.isnan(ext.P_max[0]).any() else ext.P_max[0]
    sv = np.linalg.svd(residual_matrix(triplet, r0, P_min), compute_uv=False)
    diag["residual_singular_values_at_P_min"] = sv
    diag["riccati_residual_P_min"] = float(np.abs(riccati_residual(triplet, r0, P_min)).max(initial=0))
    if P_max is not None:
        diag["riccati_residual_P_max"] = float(np.abs(riccati_residual(triplet, r0, P_max)).max(initial=0))
        diag["min_eig_P_max_minus_P_min"] = float(la.min_eig(P_max - P_min))
    return SolutionSetSummary(True, P_min, P_max, interval, bool(ext.strict[0]), diag)
