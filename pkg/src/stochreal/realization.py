"""Deterministic realization of a factorizable series ``r_k = H F^(k-1) N``.

Hankel blocks are built from the lags, their numerical rank gives the
minimal order, and a balanced SVD factorization (Ho-Kalman) gives a minimal
triplet.  Minimal triplets of one series are related by similarity
transforms, which :func:`find_isomorphism` recovers.

The ``_stack`` kernels operate on a leading batch axis and back both the
single-series functions here and the batched classifier.
"""
from dataclasses import dataclass

import numpy as np

from . import _linalg as la
from .errors import (DifferentOrders, InsufficientLags, NotIsomorphic,
                     OrderTooLargeForWindow, ReconstructionFailure,
                     SingularTransform)
from .model import CovarianceSeries

GAP_RATIO = 1e6
RECONSTRUCTION_TOL = 1e-6
_SIGNIFICANT = 1e-13


@dataclass(frozen=True)
class RealizationTriplet:
    """Minimal-realization triplet with ``H`` (1, n), ``F`` (n, n), ``N`` (n, 1)."""

    H: np.ndarray
    F: np.ndarray
    N: np.ndarray

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(self.F, dtype=float))
        n = F.shape[0] if F.size else 0
        object.__setattr__(self, "F", F.reshape(n, n))
        object.__setattr__(self, "H", np.asarray(self.H, dtype=float).reshape(1, n))
        object.__setattr__(self, "N", np.asarray(self.N, dtype=float).reshape(n, 1))

    @property
    def n(self):
        return self.F.shape[0]

    @classmethod
    def empty(cls):
        return cls(np.zeros((1, 0)), np.zeros((0, 0)), np.zeros((0, 1)))

    @classmethod
    def from_params(cls, params):
        """The direct realization ``(b, a + cb, a eta b^T + c r0)`` of a GUM."""
        F = params.a + params.c @ params.b
        N = params.a @ params.eta @ params.b.T + params.c * params.r0
        return cls(params.b, F, N)

    def observability(self, rows=None):
        rows = self.n if rows is None else rows
        out = np.zeros((rows, self.n))
        v = self.H.copy()
        for i in range(rows):
            out[i] = v[0]
            v = v @ self.F
        return out

    def reachability(self, cols=None):
        cols = self.n if cols is None else cols
        out = np.zeros((self.n, cols))
        v = self.N.copy()
        for j in range(cols):
            out[:, j] = v[:, 0]
            v = self.F @ v
        return out

    def is_minimal(self, tol=la.RANK_TOL):
        if self.n == 0:
            return True
        ranks = [np.linalg.matrix_rank(m, tol=tol * max(1.0, np.abs(m).max()))
                 for m in (self.observability(), self.reachability())]
        return ranks == [self.n, self.n]


@dataclass(frozen=True)
class HankelBlock:
    """``entries[i, j] = r_{i+j+1}`` for 0-based ``i < p``, ``j < q``."""

    entries: np.ndarray

    @property
    def p(self):
        return self.entries.shape[0]

    @property
    def q(self):
        return self.entries.shape[1]


@dataclass(frozen=True)
class Realization:
    """Ho-Kalman output with the diagnostics reported by the CLI."""

    triplet: RealizationTriplet
    singular_values: np.ndarray
    reconstruction_error: float
    window: tuple


def _hankel_index(p, q, shift=0):
    return np.add.outer(np.arange(p), np.arange(q)) + shift


def _hankel_stack(lags, p, q, shift=0):
    # lags[..., k] holds r_{k+1}
    return lags[..., _hankel_index(p, q, shift)]


def build_hankel(series, p, q):
    p, q = int(p), int(q)
    if p < 1 or q < 1:
        raise ValueError("Hankel dimensions must be positive")
    if p + q - 1 > series.K:
        raise InsufficientLags(f"a {p}x{q} Hankel block needs {p + q - 1} lags, have {series.K}")
    return HankelBlock(_hankel_stack(np.asarray(series.lags), p, q))


def _significant_floor(smax, tol):
    return np.maximum(tol * smax, la.SV_FLOOR)


def _estimate_order_stack(sv, tol=la.RANK_TOL, gap=GAP_RATIO):
    """Order from singular values ``sv`` (batch, w), sorted descending.

    The last singular-value ratio ``s_i / s_{i+1} >= gap`` with a significant
    ``s_i`` wins; without such a gap, singular values above
    ``max(tol * s_max, floor)`` are counted.
    """
    sv = np.atleast_2d(sv)
    smax = sv[:, 0]
    tiny = np.finfo(float).tiny
    significant = sv > np.maximum(_SIGNIFICANT * smax, la.SV_FLOOR)[:, None]
    ratio = sv[:, :-1] / np.maximum(sv[:, 1:], tiny)
    is_gap = (ratio >= gap) & significant[:, :-1]
    w = sv.shape[1]
    last_gap = np.where(is_gap.any(axis=1), w - 1 - np.argmax(is_gap[:, ::-1], axis=1), 0)
    counted = (sv > _significant_floor(smax, tol)[:, None]).sum(axis=1)
    order = np.where(is_gap.any(axis=1), last_gap, counted)
    return np.where(smax <= la.SV_FLOOR, 0, order)


def estimate_order(sv, tol=la.RANK_TOL, gap=GAP_RATIO):
    sv = np.asarray(sv, dtype=float)
    if sv.size == 0:
        return 0
    return int(_estimate_order_stack(sv[None, :], tol, gap)[0])


def numerical_rank(block, tol=la.RANK_TOL):
    """Number of singular values above ``max(tol * s_max, 1e-12)``, plus the spectrum."""
    entries = block.entries if isinstance(block, HankelBlock) else np.asarray(block)
    sv = np.linalg.svd(entries, compute_uv=False)
    if sv.size == 0:
        return 0, sv
    return int((sv > _significant_floor(sv[0], tol)).sum()), sv


def default_window(series, tol=la.RANK_TOL):
    """Square window ``max(2n + 2, 6)`` from an order estimate on the largest block."""
    w_max = series.K // 2
    if w_max < 1:
        raise InsufficientLags(f"need at least 2 lags, have {series.K}")
    sv = np.linalg.svd(_hankel_stack(np.asarray(series.lags), w_max, w_max), compute_uv=False)
    n = estimate_order(sv, tol)
    if n + 1 > w_max:
        raise OrderTooLargeForWindow(f"estimated order {n} needs more than {series.K} lags")
    w = min(max(2 * n + 2, 6), w_max)
    return w, w


def _ho_kalman_stack(lags, p, q, n):
    """Balanced Ho-Kalman for a batch of lag arrays sharing order ``n``.

    Returns ``H`` (B, 1, n), ``F`` (B, n, n), ``N`` (B, n, 1) and the
    singular values of the p x q block.
    """
    h0 = _hankel_stack(lags, p, q)
    h1 = _hankel_stack(lags, p, q, shift=1)
    u, s, vt = np.linalg.svd(h0)
    sq = np.sqrt(s[:, :n])
    un = u[:, :, :n]
    vn = np.swapaxes(vt[:, :n, :], 1, 2)
    obs = un * sq[:, None, :]
    ctr = np.swapaxes(vn * sq[:, None, :], 1, 2)
    left = np.swapaxes(un / sq[:, None, :], 1, 2)
    right = vn / sq[:, None, :]
    F = left @ h1 @ right
    return obs[:, :1, :], F, ctr[:, :, :1], s


def _reconstruct_stack(H, F, N, K):
    B = F.shape[0]
    out = np.empty((B, K))
    v = N
    for k in range(K):
        out[:, k] = (H @ v)[:, 0, 0]
        v = F @ v
    return out


def _relative_error_stack(approx, exact):
    err = np.linalg.norm(approx - exact, axis=-1)
    scale = np.maximum(np.linalg.norm(exact, axis=-1), la.SV_FLOOR)
    return err / scale


def realize(series, p=None, q=None, tol=la.RANK_TOL, max_rel_error=RECONSTRUCTION_TOL):
    """Ho-Kalman with diagnostics; see :func:`ho_kalman`."""
    if p is None or q is None:
        p, q = default_window(series, tol)
    p, q = int(p), int(q)
    if p + q > series.K:
        raise InsufficientLags(f"window {p}x{q} needs {p + q} lags, have {series.K}")
    lags = np.asarray(series.lags)[None, :]
    sv = np.linalg.svd(_hankel_stack(lags, p, q)[0], compute_uv=False)
    n = estimate_order(sv, tol)
    if n == 0:
        return Realization(RealizationTriplet.empty(), sv, 0.0, (p, q))
    if n >= min(p, q):
        raise OrderTooLargeForWindow(f"order {n} does not fit a {p}x{q} window")
    H, F, N, _ = _ho_kalman_stack(lags, p, q, n)
    span = p + q
    err = float(_relative_error_stack(_reconstruct_stack(H, F, N, span), lags[:, :span])[0])
    if max_rel_error is not None and err > max_rel_error:
        raise ReconstructionFailure(f"relative reconstruction error {err:.3e}")
    return Realization(RealizationTriplet(H[0], F[0], N[0]), sv, err, (p, q))


def ho_kalman(series, p=None, q=None, tol=la.RANK_TOL, max_rel_error=RECONSTRUCTION_TOL):
    """Minimal triplet from the balanced SVD factorization of the Hankel block.

    With ``U S V^T`` the SVD of the p x q block truncated to the estimated
    order, ``O = U sqrt(S)`` and ``C = sqrt(S) V^T``; ``H`` is the first row
    of ``O``, ``N`` the first column of ``C`` and ``F = O^+ H_shift C^+``.
    The reconstruction over lags ``1..p+q`` must match to ``max_rel_error``
    (pass ``None`` to skip the check, e.g. for noisy estimates).
    """
    return realize(series, p, q, tol, max_rel_error).triplet


def reconstruct_series(triplet, r0, K):
    lags = np.zeros(int(K))
    if triplet.n:
        lags = _reconstruct_stack(triplet.H[None], triplet.F[None], triplet.N[None], int(K))[0]
    return CovarianceSeries(r0, lags)


def similarity_transform(triplet, T):
    """``(H T^-1, T F T^-1, T N)``."""
    T = np.atleast_2d(np.asarray(T, dtype=float)).reshape(triplet.n, triplet.n)
    if triplet.n == 0:
        return triplet
    if np.linalg.cond(T) > 1e12:
        raise SingularTransform("transform is numerically singular")
    Tinv = np.linalg.inv(T)
    return RealizationTriplet(triplet.H @ Tinv, T @ triplet.F @ Tinv, T @ triplet.N)


def isomorphism_residual(t1, t2, T):
    """Largest relative mismatch among the three similarity relations."""
    if t1.n == 0:
        return 0.0
    Tinv = np.linalg.inv(T)
    pairs = ((t2.H, t1.H @ Tinv), (t2.F, T @ t1.F @ Tinv), (t2.N, T @ t1.N))
    return max(np.linalg.norm(x - y) / max(np.linalg.norm(x), la.SV_FLOOR) for x, y in pairs)


def find_isomorphism(t1, t2, tol=1e-8):
    """Invertible ``T`` with ``t2 = similarity_transform(t1, T)``.

    ``T = O_2^+ O_1`` from the n-row observability matrices; raises
    NotIsomorphic when any of the three relations fails by more than ``tol``
    (relative).
    """
    if t1.n != t2.n:
        raise DifferentOrders(f"orders {t1.n} and {t2.n} differ")
    if t1.n == 0:
        return np.zeros((0, 0))
    T = la.pinv(t2.observability()) @ t1.observability()
    if np.linalg.cond(T) > 1e12:
        raise NotIsomorphic("observability matrices do not give an invertible transform")
    res = isomorphism_residual(t1, t2, T)
    if not res <= tol:
        raise NotIsomorphic(f"similarity relations violated (residual {res:.3e})")
    return T
