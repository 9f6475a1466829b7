"""Small dense linear-algebra helpers shared by the modules.

All helpers accept 0x0 matrices so that order-0 (white noise) realizations
flow through the same code paths as everything else.
"""
import numpy as np

from .errors import NoConvergence, NotPSD, NotStable

PSD_TOL = 1e-9
STRICT_TOL = 1e-12
STABILITY_MARGIN = 1e-12
RANK_TOL = 1e-9
SV_FLOOR = 1e-12


def sym(m):
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def sym_norm(m):
    """Spectral norm of a (stack of) symmetric matrices."""
    m = np.asarray(m, dtype=float)
    if m.shape[-1] == 0:
        return np.zeros(m.shape[:-2])
    return np.abs(np.linalg.eigvalsh(sym(m))).max(axis=-1)


def min_eig(m):
    """Smallest eigenvalue of the symmetric part; +inf for empty matrices."""
    m = np.asarray(m, dtype=float)
    if m.shape[-1] == 0:
        return np.full(m.shape[:-2], np.inf)
    return np.linalg.eigvalsh(sym(m))[..., 0]


def psd_floor(m, tol=PSD_TOL):
    """Eigenvalue threshold above which ``m`` still counts as PSD."""
    return -tol * (1.0 + sym_norm(m))


def is_psd(m, tol=PSD_TOL):
    return bool(np.all(min_eig(m) >= psd_floor(m, tol)))


def project_psd(m, tol=PSD_TOL, name="matrix"):
    """Symmetrize and clip eigenvalues that are negative within tolerance.

    Raises NotPSD when an eigenvalue falls below the tolerance band.
    """
    m = sym(m)
    if m.shape[-1] == 0:
        return m
    w, v = np.linalg.eigh(m)
    if w[0] < psd_floor(m, tol):
        raise NotPSD(f"{name} has eigenvalue {w[0]:.3e} below tolerance")
    if w[0] >= 0:
        return m
    w = np.clip(w, 0.0, None)
    return sym((v * w) @ v.T)


def psd_sqrt(m):
    """Symmetric square root L with L @ L.T == m (eigenvalues clipped at 0)."""
    m = sym(m)
    if m.shape[-1] == 0:
        return m
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def spectral_radius(m):
    m = np.asarray(m, dtype=float)
    if m.shape[-1] == 0:
        return 0.0
    return float(np.abs(np.linalg.eigvals(m)).max())


def pinv(m, tol=RANK_TOL):
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return m.T.copy()
    return np.linalg.pinv(m, rcond=tol)


def solve_lyapunov(f, w, margin=STABILITY_MARGIN, max_iter=200):
    """Solve ``X = W + F X F^T`` for a stable ``F``.

    The n^2 linear system ``(I - F kron F) vec(X) = vec(W)`` is solved
    directly; if that system is numerically singular a squaring fixed-point
    iteration is used instead.
    """
    f = np.asarray(f, dtype=float)
    w = sym(w)
    n = f.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    rho = spectral_radius(f)
    if rho >= 1.0 - margin:
        raise NotStable(f"spectral radius {rho:.6g} is not below 1")
    try:
        lhs = np.eye(n * n) - np.kron(f, f)
        x = np.linalg.solve(lhs, w.reshape(-1)).reshape(n, n)
    except np.linalg.LinAlgError:
        x = _lyapunov_squaring(f, w, max_iter)
    return sym(x)


def _lyapunov_squaring(f, w, max_iter):
    # X = sum_k F^k W F^k^T, accumulated two-fold per step.
    x = w.copy()
    fk = f.copy()
    for _ in range(max_iter):
        step = fk @ x @ fk.T
        x = x + step
        fk = fk @ fk
        if np.abs(step).max() <= 1e-16 * (1.0 + np.abs(x).max()):
            return x
    raise NoConvergence("Lyapunov fixed-point iteration did not converge")
