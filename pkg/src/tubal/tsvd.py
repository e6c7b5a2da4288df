"""t-SVD, tubal and multi rank, the tensor nuclear and spectral norms, and
singular value thresholding in the Fourier domain."""

from dataclasses import dataclass

import numpy as np

from ._validation import check_tensor
from .tensor_core import fft3, ifft3, t_product, t_transpose


@dataclass(frozen=True)
class TSvdFactors:
    """Factors of ``M = U * S * V^T`` with ``r`` singular tubes kept."""

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    r: int

    def reconstruct(self):
        return t_product(self.U, t_product(self.S, t_transpose(self.V)))

    def singular_tubes(self):
        """``(r, n3)`` array of the diagonal tubes of ``S``."""
        m = min(self.S.shape[0], self.S.shape[1])
        return np.stack([self.S[i, i, :] for i in range(m)])


def _half_slices(n3):
    # slices 0..n3//2 determine the rest by conjugate symmetry
    return range(n3 // 2 + 1)


def _fill_conjugate(X_hat):
    n3 = X_hat.shape[2]
    for k in range(n3 // 2 + 1, n3):
        X_hat[:, :, k] = np.conj(X_hat[:, :, n3 - k])
    return X_hat


def _is_self_conjugate(k, n3):
    return k == 0 or 2 * k == n3


def _slice_svd(A, k, n3, full_matrices):
    """SVD of one Fourier slice with a deterministic phase convention."""
    if _is_self_conjugate(k, n3):
        A = A.real
    try:
        u, s, vh = np.linalg.svd(A, full_matrices=full_matrices)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"SVD failed on Fourier slice {k}: {exc}") from exc
    # first nonzero component of each left singular vector made real-positive
    idx = np.argmax(np.abs(u) > 1e-12 * np.abs(u).max(axis=0), axis=0)
    lead = u[idx, np.arange(u.shape[1])]
    phase = np.where(lead == 0, 1.0, np.conj(lead) / np.where(lead == 0, 1.0, np.abs(lead)))
    u = u * phase
    # columns beyond len(s) of u have no partner in vh
    vh = vh.copy()
    m = len(s)
    vh[:m] = vh[:m] * np.conj(phase[:m])[:, None]
    return u, s, vh


def t_svd(M):
    """Full t-SVD: ``U`` is ``n1 x n1 x n3``, ``S`` is ``n1 x n2 x n3``, ``V`` is
    ``n2 x n2 x n3``."""
    M = check_tensor(M)
    n1, n2, n3 = M.shape
    M_hat = fft3(M)
    U_hat = np.zeros((n1, n1, n3), dtype=complex)
    S_hat = np.zeros((n1, n2, n3), dtype=complex)
    V_hat = np.zeros((n2, n2, n3), dtype=complex)
    m = min(n1, n2)
    for k in _half_slices(n3):
        u, s, vh = _slice_svd(M_hat[:, :, k], k, n3, full_matrices=True)
        U_hat[:, :, k] = u
        S_hat[np.arange(m), np.arange(m), k] = s
        V_hat[:, :, k] = vh.conj().T
    for X in (U_hat, S_hat, V_hat):
        _fill_conjugate(X)
    return TSvdFactors(ifft3(U_hat), ifft3(S_hat), ifft3(V_hat), m)


def t_svd_reduced(M, r):
    """Reduced t-SVD keeping the leading ``r`` singular triplets of every slice."""
    M = check_tensor(M)
    n1, n2, n3 = M.shape
    if not 1 <= r <= min(n1, n2):
        raise ValueError(f"r must lie in [1, {min(n1, n2)}], got {r}")
    M_hat = fft3(M)
    U_hat = np.zeros((n1, r, n3), dtype=complex)
    S_hat = np.zeros((r, r, n3), dtype=complex)
    V_hat = np.zeros((n2, r, n3), dtype=complex)
    for k in _half_slices(n3):
        u, s, vh = _slice_svd(M_hat[:, :, k], k, n3, full_matrices=False)
        U_hat[:, :, k] = u[:, :r]
        S_hat[np.arange(r), np.arange(r), k] = s[:r]
        V_hat[:, :, k] = vh[:r].conj().T
    for X in (U_hat, S_hat, V_hat):
        _fill_conjugate(X)
    return TSvdFactors(ifft3(U_hat), ifft3(S_hat), ifft3(V_hat), r)


def fourier_singular_values(M):
    """``(n3, min(n1, n2))`` array; row ``k`` holds the singular values of slice ``k``."""
    M = check_tensor(M)
    n3 = M.shape[2]
    half = n3 // 2 + 1
    stack = fft3(M)[:, :, :half].transpose(2, 0, 1)
    sv = np.linalg.svd(stack, compute_uv=False)
    return np.concatenate([sv, sv[1:n3 - half + 1][::-1]])


def default_rank_tol(shape):
    return max(shape[0], shape[1]) * np.finfo(float).eps


def multi_rank(M, tol=None):
    """Numerical rank of every Fourier slice.

    A singular value counts when it exceeds ``tol`` times the largest singular
    value of its slice. A floor of ``max(n1, n2, n3) * eps`` times the largest
    singular value over all slices keeps round-off in numerically zero slices
    from being counted.
    """
    M = check_tensor(M)
    if tol is None:
        tol = default_rank_tol(M.shape)
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    sv = fourier_singular_values(M)
    top = sv.max() if sv.size else 0.0
    if top == 0.0:
        return np.zeros(M.shape[2], dtype=int)
    floor = max(M.shape) * np.finfo(float).eps * top
    thresh = np.maximum(tol * sv[:, :1], floor)
    return (sv > thresh).sum(axis=1).astype(int)


def tubal_rank(M, tol=None):
    return int(multi_rank(M, tol).max())


def tnn(M):
    """Tensor nuclear norm: sum of the singular values of all Fourier slices."""
    return float(fourier_singular_values(M).sum())


def spectral_norm(M):
    """Largest singular value over all Fourier slices."""
    sv = fourier_singular_values(M)
    return float(sv.max()) if sv.size else 0.0


def t_svt(M, tau):
    """Shrink every Fourier-slice singular value by ``tau``.

    The result minimizes ``(tau / n3) * tnn(X) + 0.5 * ||X - M||_F**2``.
    """
    M = check_tensor(M)
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if tau == 0:
        return M.copy()
    n3 = M.shape[2]
    half = n3 // 2 + 1
    M_hat = fft3(M)
    stack = np.ascontiguousarray(M_hat[:, :, :half].transpose(2, 0, 1))
    stack[0] = stack[0].real
    if n3 % 2 == 0:
        stack[-1] = stack[-1].real
    u, s, vh = np.linalg.svd(stack, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    out = np.zeros_like(M_hat)
    out[:, :, :half] = np.matmul(u * s[:, None, :], vh).transpose(1, 2, 0)
    _fill_conjugate(out)
    return ifft3(out)


def svt_matrix(A, tau, real=False):
    """Matrix singular value thresholding ``U diag(max(s - tau, 0)) V^H``."""
    if real:
        A = A.real
    u, s, vh = np.linalg.svd(A, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    keep = s > 0
    if not keep.any():
        return np.zeros_like(A)
    return (u[:, keep] * s[keep]) @ vh[keep]
