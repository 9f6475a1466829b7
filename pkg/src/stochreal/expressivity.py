"""Which model families can produce a given covariance series.

A factorizable series ``r_k = H F^(k-1) N`` with variance ``r0`` is

* a covariance series (and GUM-realizable) iff the admissible set of state
  covariances is non-empty;
* HMC-realizable iff some admissible ``P`` gives ``S = N - F P H^T = 0``;
* D-GUM-realizable iff some admissible ``P`` is a fixed point of the
  Riccati map (``alpha = Q - S R^-1 S^T = 0``);
* RNN-realizable iff such a fixed point also satisfies
  ``P = r0 R^-2 S S^T``, which forces ``n = 1``.

A feasible ``P`` with ``R > 0`` is turned into GUM parameters by
``a = F - S R^-1 H, b = H, c = S R^-1, beta = R, alpha = Q - S R^-1 S^T,
eta = P``.

The batched pipeline (:func:`classify_batch`) groups series by order and
window so that the Hankel SVDs, Ho-Kalman factorizations and Riccati
recursions run on stacked arrays.
"""
from dataclasses import dataclass, field

import numpy as np

from . import _linalg as la
from . import stochastic as sr
from .errors import DegenerateR, Infeasible, NotPositiveReal, StochRealError
from .model import CovarianceSeries, GumParameters, ModelFamily
from .realization import (RECONSTRUCTION_TOL, RealizationTriplet, _estimate_order_stack,
                          _hankel_stack, _ho_kalman_stack, _reconstruct_stack,
                          _relative_error_stack)

FIXED_POINT_TOL = 1e-9
RNN_TOL = 1e-9
CURVE_TOL = 1e-9
HMC_MAX_ITER = 1000
CARTOGRAPHY_LAGS = 20


@dataclass(frozen=True)
class FamilyVerdict:
    """``realizable`` is True, False (refuted) or None (undetermined)."""

    realizable: object
    witness: GumParameters = None
    certificate: dict = field(default_factory=dict)
    reason: str = ""


@dataclass(frozen=True)
class ClassificationReport:
    factorizable: object
    order: object
    is_covariance: object
    gum: FamilyVerdict
    hmc: FamilyVerdict
    dgum: FamilyVerdict
    rnn: FamilyVerdict
    triplet: RealizationTriplet = None
    diagnostics: dict = field(default_factory=dict)

    def verdicts(self):
        return {"GUM": self.gum.realizable, "HMC": self.hmc.realizable,
                "DGUM": self.dgum.realizable, "RNN": self.rnn.realizable}


# --------------------------------------------------------------------------
# witnesses

def _noise_blocks(triplet, r0, P):
    res = sr.residual_matrix(triplet, r0, P)
    n = triplet.n
    return res[:n, :n], res[:n, n:], float(res[n, n])


def gum_from_realization(triplet, r0, P, tol=la.PSD_TOL, strict=True):
    """GUM parameters with covariance ``(r0, H F^(k-1) N)`` and ``eta = P``.

    Raises Infeasible when ``P`` is not admissible and DegenerateR when
    ``R = r0 - H P H^T <= tol (1 + r0)``.
    """
    P = la.sym(np.asarray(P, dtype=float).reshape(triplet.n, triplet.n))
    if not sr.is_feasible(triplet, r0, P, tol, strict=strict):
        raise Infeasible("P is not in the admissible set")
    Q, S, R = _noise_blocks(triplet, r0, P)
    if R <= tol * (1.0 + r0):
        raise DegenerateR(f"R = {R:.3e} is too small to divide by")
    c = S / R
    a = triplet.F - c @ triplet.H
    alpha = la.project_psd(Q - c @ S.T, tol, name="alpha")
    return GumParameters(a, triplet.H, c, alpha, R, P)


def _dgum_witness(triplet, r0, P, tol=la.PSD_TOL):
    g = gum_from_realization(triplet, r0, P, tol, strict=False)
    if np.abs(g.alpha).max(initial=0) > FIXED_POINT_TOL * (1 + np.abs(P).max(initial=0)):
        raise Infeasible("P is not a Riccati fixed point")
    return g.replace(alpha=np.zeros_like(g.alpha))


def _rnn_witness(triplet, r0, P, tol=la.PSD_TOL):
    g = _dgum_witness(triplet, r0, P, tol)
    return g.replace(eta=r0 * (g.c @ g.c.T))


def _hmc_witness(triplet, r0, P, tol=la.PSD_TOL):
    # S = 0, so no division by R is needed and R = 0 is allowed
    Q, _, R = _noise_blocks(triplet, r0, P)
    return GumParameters(triplet.F, triplet.H, np.zeros((triplet.n, 1)),
                         la.project_psd(Q, tol, name="Q"), max(R, 0.0), P)


def _rnn_residual(triplet, r0, P):
    """``P - r0 R^-2 S S^T`` for a candidate fixed point ``P``."""
    _, S, R = _noise_blocks(triplet, r0, P)
    return P - r0 * (S @ S.T) / (R * R)


# --------------------------------------------------------------------------
# per-family tests on a single triplet

def _extremal(triplet, r0):
    ext = sr._extremal_stack(triplet.H[None], triplet.F[None], triplet.N[None],
                             np.array([float(r0)]))
    if not ext.ok[0]:
        return None, None, ext.reason[0]
    P_max = None if np.isnan(ext.P_max[0]).any() else ext.P_max[0]
    return ext.P_min[0], P_max, ""


def _symmetric_basis(n):
    basis = []
    for i in range(n):
        for j in range(i, n):
            e = np.zeros((n, n))
            if i == j:
                e[i, i] = 1.0
            else:
                e[i, j] = e[j, i] = np.sqrt(0.5)
            basis.append(e)
    return basis


def _hmc_search(triplet, r0, start, tol=la.PSD_TOL, max_iter=HMC_MAX_ITER, margin=1e-8):
    """Alternating projections for an admissible ``P`` with ``F P H^T = N``.

    The unknown is ``Q = P - F P F^T`` (so ``P`` is the Lyapunov solution
    driven by ``Q``), in orthonormal coordinates of the symmetric matrices.
    One set is ``{Q >= margin I}``; the other is the affine slice
    ``F P H^T = N`` cut by the halfspace ``H P H^T <= r0``, onto which the
    projection is exact.  Returns ``(status, P, iterations)`` with status
    "found", "refuted" or "undetermined".
    """
    F, H, N = triplet.F, triplet.H, triplet.N
    n = triplet.n
    basis = _symmetric_basis(n)
    lyap = [la.solve_lyapunov(F, e) for e in basis]
    A = np.column_stack([(F @ L @ H.T)[:, 0] for L in lyap])
    g = np.array([(H @ L @ H.T).item() for L in lyap])
    rhs = N[:, 0]
    scale = 1.0 + np.abs(rhs).max()

    def coords(M):
        return np.array([np.sum(M * e) for e in basis])

    def matrix(x):
        return sum(xi * e for xi, e in zip(x, basis))

    A_pinv = la.pinv(A)
    x_aff = A_pinv @ rhs
    if np.abs(A @ x_aff - rhs).max() > 1e-8 * scale:
        return "refuted", None, 0
    Ag = np.vstack([A, g])
    Ag_pinv = la.pinv(Ag)
    rhs_g = np.append(rhs, r0)

    def project_slice(x):
        y = x - A_pinv @ (A @ x - rhs)
        if g @ y <= r0:
            return y, True
        z = x - Ag_pinv @ (Ag @ x - rhs_g)
        if np.abs(Ag @ z - rhs_g).max() > 1e-8 * (scale + r0):
            return y, False
        return z, True

    x = coords(start - F @ start @ F.T)
    q_scale = 1.0 + np.abs(start).max()
    for it in range(1, max_iter + 1):
        y, ok = project_slice(x)
        if not ok:
            return "refuted", None, it
        w, v = np.linalg.eigh(la.sym(matrix(y)))
        if w[0] >= 0:
            # P is linear in Q, so it inherits the slice constraints exactly
            P = la.sym(sum(yi * L for yi, L in zip(y, lyap)))
            if sr.is_feasible(triplet, r0, P, tol):
                return "found", P, it
        x = coords((v * np.maximum(w, margin * q_scale)) @ v.T)
    return "undetermined", None, max_iter


def _hmc_screens(triplet, r0, tol=la.PSD_TOL):
    """Necessary conditions; returns a refutation reason or ''."""
    F, H, N = triplet.F, triplet.H, triplet.N
    u, s, vt = np.linalg.svd(F)
    rank = int((s > la.RANK_TOL * max(1.0, s[0] if s.size else 0)).sum())
    ur = u[:, :rank]
    resid = N - ur @ (ur.T @ N)
    if np.linalg.norm(resid) > 1e-8 * max(np.linalg.norm(N), la.SV_FLOOR):
        return "N is not in the column span of F"
    if rank == triplet.n:
        v = (H @ np.linalg.solve(F, N)).item()
        if not v > 0:
            return f"H F^-1 N = {v:.6g} is not positive"
        if v > r0 * (1 + tol) + tol:
            return f"H F^-1 N = {v:.6g} exceeds r0"
    return ""


def _hmc_verdict(triplet, r0, P_min, P_max, tol=la.PSD_TOL, max_iter=HMC_MAX_ITER,
                 witness=True):
    reason = _hmc_screens(triplet, r0, tol)
    if reason:
        return FamilyVerdict(False, reason=reason)
    if triplet.n == 1:
        P = np.array([[triplet.N.item() / (triplet.H.item() * triplet.F.item())]])
        if not sr.is_feasible(triplet, r0, P, tol):
            return FamilyVerdict(False, certificate={"P": P},
                                 reason="P = N/(HF) is not admissible")
        status, it = "found", 0
    else:
        # P_max can be far out along poorly observed directions, so the
        # search starts at P_min and falls back to the centre of the set
        starts = [P_min] + ([] if P_max is None else [0.5 * (P_min + P_max)])
        for start in starts:
            status, P, it = _hmc_search(triplet, r0, start, tol, max_iter)
            if status != "undetermined":
                break
        if status == "refuted":
            return FamilyVerdict(False, reason="no admissible P with F P H^T = N and R >= 0")
        if status == "undetermined":
            return FamilyVerdict(None, certificate={"iterations": it},
                                 reason=f"projection search did not converge in {max_iter} iterations")
    cert = {"P": P, "iterations": it}
    if triplet.n > 1:
        cert["method"] = "alternating projections"
    w = _hmc_witness(triplet, r0, P, tol) if witness else None
    return FamilyVerdict(True, w, cert)


def _fixed_point_candidates(triplet, r0, P_min, P_max, tol=la.PSD_TOL):
    out = []
    for P in (P_min, P_max):
        if P is None:
            continue
        if any(np.allclose(P, q, rtol=0, atol=1e-9 * (1 + np.abs(q).max())) for q in out):
            continue
        _, _, R = _noise_blocks(triplet, r0, P)
        if R <= tol * (1 + r0):
            continue
        res = np.abs(sr.riccati_residual(triplet, r0, P)).max(initial=0)
        if res < FIXED_POINT_TOL * (1 + np.abs(P).max(initial=0)):
            out.append(P)
    return out


def _rnn_verdict(triplet, r0, candidates, tol=la.PSD_TOL, witness=True):
    if triplet.n > 1:
        return FamilyVerdict(False, reason="rank-1 constraint: eta = c r0 c^T has rank 1 "
                                           f"but must be positive definite for n = {triplet.n}")
    for P in candidates:
        res = np.abs(_rnn_residual(triplet, r0, P)).max(initial=0)
        if res <= RNN_TOL * (1 + np.abs(P).max(initial=0)):
            w = _rnn_witness(triplet, r0, P, tol) if witness else None
            return FamilyVerdict(True, w, {"P": P, "rnn_residual": float(res)})
    return FamilyVerdict(False, reason="no Riccati fixed point satisfies P = r0 R^-2 S S^T")


def hmc_feasible(triplet, r0, tol=la.PSD_TOL, max_iter=HMC_MAX_ITER):
    """HMC realizability with a witness ``P`` (``S = 0``) or a refutation.

    Necessary screens come first: ``N`` must lie in the column span of
    ``F`` and, for invertible ``F``, ``0 < H F^-1 N <= r0``.  For ``n = 1``
    the only candidate is ``P = N/(HF)``; otherwise a projection search is
    run whose failure to converge gives ``realizable = None``.
    """
    if triplet.n == 0:
        return FamilyVerdict(True, GumParameters(np.zeros((0, 0)), np.zeros((1, 0)),
                                                 np.zeros((0, 1)), np.zeros((0, 0)), r0,
                                                 np.zeros((0, 0))), {"P": np.zeros((0, 0))})
    P_min, P_max, reason = _extremal(triplet, r0)
    if P_min is None:
        return FamilyVerdict(False, reason=f"not a covariance series: {reason}")
    return _hmc_verdict(triplet, r0, P_min, P_max, tol, max_iter)


def dgum_feasible(triplet, r0, tol=la.PSD_TOL):
    """Riccati fixed points inside the admissible set (the extremal elements).

    For ``n = 1`` these are the closed-form roots ``{P1, P2}``.  Candidates
    with ``R = 0`` (where no D-GUM can be built) are dropped.  Raises
    NotPositiveReal when the set is empty.
    """
    if triplet.n == 0:
        return [np.zeros((0, 0))]
    if triplet.n == 1:
        iv = sr.scalar_interval(triplet.H, triplet.F, triplet.N, r0)
        if iv is None:
            raise NotPositiveReal("closed-form interval is empty")
        P_min, P_max = (np.array([[v]]) for v in iv)
    else:
        P_min, P_max = sr.compute_extremal_P(triplet, r0)
    return _fixed_point_candidates(triplet, r0, P_min, P_max, tol)


def rnn_feasible(triplet, r0, tol=la.PSD_TOL):
    """RNN realizability: refuted for ``n > 1``, else tested on the D-GUM fixed points."""
    if triplet.n == 0:
        return FamilyVerdict(True, certificate={"P": np.zeros((0, 0))})
    if triplet.n > 1:
        return _rnn_verdict(triplet, r0, [], tol)
    try:
        candidates = dgum_feasible(triplet, r0, tol)
    except NotPositiveReal as exc:
        return FamilyVerdict(False, reason=f"not a covariance series: {exc}")
    return _rnn_verdict(triplet, r0, candidates, tol)


# --------------------------------------------------------------------------
# classification pipeline

def _white_noise_report(r0, diagnostics):
    w = GumParameters(np.zeros((0, 0)), np.zeros((1, 0)), np.zeros((0, 1)),
                      np.zeros((0, 0)), r0, np.zeros((0, 0)))
    cert = {"P": np.zeros((0, 0))}
    v = FamilyVerdict(True, w, cert, "white noise")
    return ClassificationReport(True, 0, True, v, v, v, v, RealizationTriplet.empty(),
                                diagnostics)


def _undetermined(reason, factorizable, order, diagnostics, is_cov=None):
    v = FamilyVerdict(None, reason=reason)
    return ClassificationReport(factorizable, order, is_cov, v, v, v, v, None, diagnostics)


def _refuted_all(order, triplet, reason, diagnostics):
    v = FamilyVerdict(False, reason=reason)
    return ClassificationReport(True, order, False, v, v, v, v, triplet, diagnostics)


def _orders(lags, tol_rank):
    """Factorizability from the ranks at windows ``w_max - 1`` and ``w_max``."""
    K = lags.shape[1]
    w_max = K // 2
    sv_big = np.linalg.svd(_hankel_stack(lags, w_max, w_max), compute_uv=False)
    sv_small = np.linalg.svd(_hankel_stack(lags, w_max - 1, w_max - 1), compute_uv=False)
    n_big = _estimate_order_stack(sv_big, tol_rank)
    n_small = _estimate_order_stack(sv_small, tol_rank)
    stable = (n_big == n_small) & (n_big < w_max - 1)
    return n_big, stable, sv_big


def classify_batch(series_list, tol_rank=la.RANK_TOL, tol_psd=la.PSD_TOL, window=None,
                   witnesses=True, hmc_max_iter=HMC_MAX_ITER):
    """Classify many series; equivalent to mapping :func:`classify`.

    Series are grouped by lag count, then by order and window, and each
    group runs through stacked Hankel SVDs, Ho-Kalman and Riccati kernels.
    ``witnesses=False`` skips building witness parameters.
    """
    series_list = list(series_list)
    reports = [None] * len(series_list)
    by_K = {}
    for i, s in enumerate(series_list):
        by_K.setdefault(s.K, []).append(i)
    for K, idx in sorted(by_K.items()):
        if K < 4:
            for i in idx:
                reports[i] = _undetermined(f"need at least 4 lags, have {K}", None, None,
                                           {"K": K})
            continue
        lags = np.stack([series_list[i].lags for i in idx])
        r0 = np.array([series_list[i].r0 for i in idx])
        n, stable, sv = _orders(lags, tol_rank)
        groups = {}
        w_max = K // 2
        for k, i in enumerate(idx):
            diag = {"K": K, "singular_values": sv[k]}
            if not stable[k]:
                reports[i] = _undetermined(
                    "Hankel rank is not stable across windows; no finite-order "
                    "factorization detected at this lag count", False, None, diag)
                continue
            if n[k] == 0:
                reports[i] = _white_noise_report(r0[k], diag)
                continue
            if window is None:
                w = min(max(2 * int(n[k]) + 2, 6), w_max)
                p, q = w, w
            else:
                p, q = window
            if n[k] >= min(p, q) or p + q > K:
                reports[i] = _undetermined(f"window {p}x{q} cannot hold order {n[k]}",
                                           True, int(n[k]), diag)
                continue
            groups.setdefault((int(n[k]), p, q), []).append(k)
        for (order, p, q), ks in sorted(groups.items()):
            _classify_group(series_list, idx, ks, lags[ks], r0[ks], order, p, q, sv[ks],
                            tol_psd, witnesses, hmc_max_iter, reports)
    return reports


def _classify_group(series_list, idx, ks, lags, r0, n, p, q, sv, tol_psd, witnesses,
                    hmc_max_iter, reports):
    H, F, N, _ = _ho_kalman_stack(lags, p, q, n)
    span = p + q
    err = _relative_error_stack(_reconstruct_stack(H, F, N, span), lags[:, :span])
    ext = sr._extremal_stack(H, F, N, r0, psd_tol=tol_psd)
    scalar = n == 1
    if scalar:
        # vectorized HMC and RNN tests; the n > 1 tests run per item
        h, f, nn = H[:, 0, 0], F[:, 0, 0], N[:, 0, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            p_hmc = (nn / (h * f)).reshape(-1, 1, 1)
        finite = np.isfinite(p_hmc[:, 0, 0]) & (f != 0)
        p_hmc = np.where(finite[:, None, None], p_hmc, 0.0)
        hmc_ok = finite & sr._feasible_stack(H, F, N, r0, p_hmc, tol_psd)
        hmc_ok &= (p_hmc[:, 0, 0] * f * h * nn > 0)
    for j, k in enumerate(ks):
        i = idx[k]
        diag = {"K": int(lags.shape[1]), "singular_values": sv[j], "window": (p, q),
                "reconstruction_error": float(err[j])}
        triplet = RealizationTriplet(H[j], F[j], N[j])
        if not err[j] <= RECONSTRUCTION_TOL:
            reports[i] = _undetermined("Ho-Kalman reconstruction failed", True, n, diag)
            continue
        if not ext.ok[j]:
            reports[i] = _refuted_all(n, triplet, f"not a covariance series: {ext.reason[j]}",
                                      diag)
            continue
        P_min = ext.P_min[j]
        P_max = None if np.isnan(ext.P_max[j]).any() else ext.P_max[j]
        rz = float(r0[j])
        diag["strict"] = bool(ext.strict[j])
        cert = {"P_min": P_min, "P_max": P_max}
        gum_w = None
        if witnesses:
            try:
                gum_w = gum_from_realization(triplet, rz, P_min, tol_psd, strict=False)
            except StochRealError:
                gum_w = None
        gum = FamilyVerdict(True, gum_w, cert)
        candidates = _fixed_point_candidates(triplet, rz, P_min, P_max, tol_psd)
        if candidates:
            dw = None
            if witnesses:
                try:
                    dw = _dgum_witness(triplet, rz, candidates[0], tol_psd)
                except StochRealError:
                    dw = None
            dgum = FamilyVerdict(True, dw, {"candidates": candidates})
        else:
            dgum = FamilyVerdict(False, reason="no Riccati fixed point with R > 0")
        if dgum.realizable:
            rnn = _rnn_verdict(triplet, rz, candidates, tol_psd, witnesses)
        else:
            rnn = FamilyVerdict(False, reason="not D-GUM realizable")
        if scalar and not witnesses:
            if hmc_ok[j]:
                hmc = FamilyVerdict(True, certificate={"P": p_hmc[j]})
            else:
                hmc = FamilyVerdict(False, reason="P = N/(HF) is not admissible")
        else:
            hmc = _hmc_verdict(triplet, rz, P_min, P_max, tol_psd, hmc_max_iter, witnesses)
        reports[i] = ClassificationReport(True, n, True, gum, hmc, dgum, rnn, triplet, diag)


def classify(series, tol_rank=la.RANK_TOL, tol_psd=la.PSD_TOL, window=None, witnesses=True,
             hmc_max_iter=HMC_MAX_ITER):
    """Realizability of ``series`` by GUM, HMC, D-GUM and RNN.

    Pipeline: Hankel ranks at the two largest windows (factorizable iff they
    agree), Ho-Kalman, positive-real check through the Riccati recursion,
    then the per-family tests.  Failures are reported, never raised.
    """
    return classify_batch([series], tol_rank, tol_psd, window, witnesses, hmc_max_iter)[0]


# --------------------------------------------------------------------------
# scalar cartography

def rnn_curves(F, r0):
    """The two RNN curves ``HN = r0 F`` and ``HN = r0 F (2F^2 - 1)``."""
    F = np.asarray(F, dtype=float)
    return r0 * F, r0 * F * (2 * F * F - 1)


def closed_form_labels(F, HN, r0, tol=CURVE_TOL):
    """Closed-form labels for ``r_k = F^(k-1) HN`` (arrays broadcast).

    Returns a dict of arrays: ``covariance`` in {"inside", "outside",
    "boundary"}, ``hmc``, ``dgum``, ``gum``, ``rnn`` booleans, the
    distances to both RNN curves and a ``boundary`` mask (equality in the
    covariance condition, or ``HN = 0`` where the series is white noise).
    """
    F, HN = np.broadcast_arrays(np.asarray(F, dtype=float), np.asarray(HN, dtype=float))
    lo, hi = r0 * (F - 1) / 2, r0 * (F + 1) / 2
    band = tol * max(r0, la.SV_FLOOR)
    on_edge = (np.abs(HN - lo) <= band) | (np.abs(HN - hi) <= band)
    inside = (HN >= lo) & (HN <= hi) & (np.abs(F) < 1)
    cov = np.where(on_edge, "boundary", np.where(inside, "inside", "outside"))
    hmc = inside & (((F >= 0) & (HN > 0) & (HN <= r0 * F + band))
                    | ((F <= 0) & (HN < 0) & (HN >= r0 * F - band)))
    c1, c2 = rnn_curves(F, r0)
    d1, d2 = np.abs(HN - c1), np.abs(HN - c2)
    rnn = inside & ((d1 <= band) | (d2 <= band))
    return {"covariance": cov, "gum": inside, "hmc": hmc, "dgum": inside.copy(), "rnn": rnn,
            "rnn_curve1_dist": d1, "rnn_curve2_dist": d2,
            "boundary": on_edge | (np.abs(HN) <= band)}


@dataclass(frozen=True)
class CartographyGrid:
    """Labels on the cell centres of an M_F x M_HN grid over ``(-1, 1) x (-r0, r0)``.

    Arrays are indexed ``[i_F, j_HN]``.  ``closed`` and ``pipeline`` hold the
    closed-form and classifier labels; ``mismatches`` lists off-boundary
    cells where they disagree.
    """

    r0: float
    F_axis: np.ndarray
    HN_axis: np.ndarray
    closed: dict
    pipeline: dict
    boundary: np.ndarray
    band: float
    mismatches: list

    @property
    def shape(self):
        return (self.F_axis.size, self.HN_axis.size)

    def curves(self):
        c1, c2 = rnn_curves(self.F_axis, self.r0)
        return {
            "r0": self.r0,
            "band": self.band,
            "covariance_region": {"lower": "HN = r0 (F - 1) / 2", "upper": "HN = r0 (F + 1) / 2"},
            "hmc_region": {"F >= 0": "0 < HN <= r0 F", "F <= 0": "r0 F <= HN < 0"},
            "rnn_curve1": {"equation": "HN = r0 F", "F": self.F_axis, "HN": c1},
            "rnn_curve2": {"equation": "HN = r0 F (2 F^2 - 1)", "F": self.F_axis, "HN": c2},
        }


def cell_centres(M, lo, hi):
    M = int(M)
    return lo + (hi - lo) * (2 * np.arange(M) + 1) / (2 * M)


def scalar_cartography(r0=1.0, grid_F=101, grid_HN=None, K=CARTOGRAPHY_LAGS,
                       tol_rank=la.RANK_TOL, tol_psd=la.PSD_TOL):
    """Label the ``(F, HN)`` plane by closed form and by the classifier.

    Each cell centre defines ``r_k = F^(k-1) HN`` (``k = 1..K``, ``H = 1``);
    the classifier sees only the series.  The RNN band of the rasterized
    output is half a cell in ``HN``; the comparison itself uses the exact
    curve test.
    """
    grid_HN = grid_F if grid_HN is None else grid_HN
    if grid_F < 3 or grid_HN < 3:
        raise ValueError("grids need at least 3 cells per axis")
    r0 = float(r0)
    F_axis = cell_centres(grid_F, -1.0, 1.0)
    HN_axis = r0 * cell_centres(grid_HN, -1.0, 1.0)
    Fg, HNg = np.meshgrid(F_axis, HN_axis, indexing="ij")
    closed = closed_form_labels(Fg, HNg, r0)
    band = r0 / grid_HN
    closed["rnn_band"] = closed["gum"] & (np.minimum(closed["rnn_curve1_dist"],
                                                     closed["rnn_curve2_dist"]) <= band)

    powers = Fg[..., None] ** np.arange(K)
    lags = (HNg[..., None] * powers).reshape(-1, K)
    series = [CovarianceSeries(r0, row) for row in lags]
    reports = classify_batch(series, tol_rank, tol_psd, witnesses=False)
    shape = Fg.shape
    pipe = {key: np.array([getattr(rep, key).realizable is True for rep in reports]).reshape(shape)
            for key in ("gum", "hmc", "dgum", "rnn")}
    pipe["covariance"] = np.array([rep.is_covariance is True for rep in reports]).reshape(shape)
    pipe["order"] = np.array([-1 if rep.order is None else rep.order
                              for rep in reports]).reshape(shape)

    boundary = closed["boundary"]
    mismatches = []
    checks = (("covariance", closed["gum"]), ("gum", closed["gum"]), ("hmc", closed["hmc"]),
              ("dgum", closed["dgum"]), ("rnn", closed["rnn"]))
    for i, j in zip(*np.nonzero(~boundary)):
        bad = [name for name, ref in checks if pipe[name][i, j] != ref[i, j]]
        if bad:
            mismatches.append((int(i), int(j), bad))
    return CartographyGrid(r0, F_axis, HN_axis, closed, pipe, boundary, band, mismatches)
