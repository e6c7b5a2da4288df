"""Third-order tensor algebra under the t-product.

Tensors are plain ``numpy.ndarray`` objects of shape ``(n1, n2, n3)``. The
Fourier transform runs along the last axis, unnormalized forward and ``1/n3``
on the inverse, so that ``||A||_F = ||fft3(A)||_F / sqrt(n3)``.
"""

import numpy as np

from ._validation import check_same_shape, check_tensor

# Relative size of the imaginary part tolerated when returning to real space.
IMAG_TOL = 1e-10


class ConjugateSymmetryError(ValueError):
    """Raised when a Fourier-domain result is not the transform of a real tensor."""


def fft3(A):
    """Transform ``A`` along the third mode; slice ``k`` is ``out[:, :, k]``."""
    A = check_tensor(A)
    return np.fft.fft(A, axis=2)


def ifft3(A_hat, real=True):
    """Inverse of :func:`fft3`.

    With ``real=True`` the imaginary residue is dropped, but only if it is
    below ``IMAG_TOL`` relative to the result; otherwise
    :class:`ConjugateSymmetryError` is raised.
    """
    out = np.fft.ifft(A_hat, axis=2)
    if not real:
        return out
    return _to_real(out)


def _to_real(C):
    re = C.real
    scale = max(np.linalg.norm(re), 1.0)
    resid = np.linalg.norm(C.imag)
    if resid > IMAG_TOL * scale:
        raise ConjugateSymmetryError(
            f"imaginary residue {resid:.3e} exceeds tolerance "
            f"(|result|_F = {np.linalg.norm(re):.3e})"
        )
    return np.ascontiguousarray(re)


def blockdiag(A_hat):
    """Block-diagonal matrix whose ``k``-th block is Fourier slice ``k``."""
    n1, n2, n3 = A_hat.shape
    out = np.zeros((n1 * n3, n2 * n3), dtype=A_hat.dtype)
    for k in range(n3):
        out[k * n1:(k + 1) * n1, k * n2:(k + 1) * n2] = A_hat[:, :, k]
    return out


def slice_matmul(A_hat, B_hat):
    """Slice-wise matrix product of two Fourier-domain tensors."""
    C = np.matmul(A_hat.transpose(2, 0, 1), B_hat.transpose(2, 0, 1))
    return C.transpose(1, 2, 0)


def t_product(A, B):
    """t-product ``A * B`` of ``n1 x n2 x n3`` and ``n2 x n4 x n3`` tensors.

    Each tube of the result is a sum of circular convolutions of tubes,
    evaluated as slice-wise matrix products in the Fourier domain.
    """
    A = check_tensor(A, name="A")
    B = check_tensor(B, name="B")
    if A.shape[1] != B.shape[0] or A.shape[2] != B.shape[2]:
        raise ValueError(
            f"t_product: incompatible shapes {A.shape} and {B.shape}"
        )
    return ifft3(slice_matmul(fft3(A), fft3(B)))


def t_transpose(A):
    """Transpose every frontal slice and reverse slices 2..n3."""
    A = check_tensor(A)
    n3 = A.shape[2]
    order = [0] + list(range(n3 - 1, 0, -1))
    return np.ascontiguousarray(A.transpose(1, 0, 2)[:, :, order])


def identity_tensor(n, n3):
    if n < 1 or n3 < 1:
        raise ValueError("identity_tensor: n and n3 must be positive")
    out = np.zeros((n, n, n3))
    out[:, :, 0] = np.eye(n)
    return out


def inner_product(A, B):
    """``<A, B> = trace(B_bar^H A_bar) / n3``, evaluated in the Fourier domain.

    For real tensors this equals the entrywise sum of ``A * B``.
    """
    A = check_tensor(A, name="A")
    B = check_tensor(B, name="B")
    check_same_shape(A, B)
    n3 = A.shape[2]
    val = np.vdot(fft3(B), fft3(A)) / n3
    scale = max(np.linalg.norm(A) * np.linalg.norm(B), 1.0)
    if abs(val.imag) > IMAG_TOL * scale:
        raise ConjugateSymmetryError(
            f"inner product has imaginary part {val.imag:.3e}"
        )
    return float(val.real)


def column_basis(i, n, n3):
    """The ``n x 1 x n3`` column basis with a single one at ``(i, 0, 0)``."""
    _check_index(i, n, "i")
    out = np.zeros((n, 1, n3))
    out[i, 0, 0] = 1.0
    return out


def tube_basis(k, n3):
    """The ``1 x 1 x n3`` tube with a single one at position ``k``."""
    _check_index(k, n3, "k")
    out = np.zeros((1, 1, n3))
    out[0, 0, k] = 1.0
    return out


def unit_tensor(i, j, k, n1, n2, n3):
    """Single-entry tensor equal to ``e_i * e_k * e_j^T`` under the t-product."""
    _check_index(i, n1, "i")
    _check_index(j, n2, "j")
    _check_index(k, n3, "k")
    out = np.zeros((n1, n2, n3))
    out[i, j, k] = 1.0
    return out


def _check_index(idx, size, name):
    if not 0 <= idx < size:
        raise IndexError(f"index {name}={idx} out of range [0, {size})")


def frobenius(A):
    return float(np.linalg.norm(np.asarray(A, dtype=float).ravel()))


def infinity(A):
    """Largest absolute entry."""
    A = np.asarray(A, dtype=float)
    return float(np.abs(A).max()) if A.size else 0.0


def l2star(x):
    """l2* norm of a tensor column (or any tensor): root of the sum of squares."""
    return frobenius(x)


def linf_2star(A):
    """Largest l2* norm over all tensor rows ``A[i, :, :]`` and columns ``A[:, j, :]``."""
    A = check_tensor(A)
    sq = A ** 2
    rows = np.sqrt(sq.sum(axis=(1, 2)))
    cols = np.sqrt(sq.sum(axis=(0, 2)))
    return float(max(rows.max(), cols.max()))
