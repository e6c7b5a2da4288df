"""scikit-learn compatible wrappers around the t-SVD and the completion solvers."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_tensor
from .completion import SolverConfig, complete_entrywise, complete_tubal
from .sampling import ENTRYWISE, TUBAL, SampleMask
from .tensor_core import t_product, t_transpose
from .tsvd import multi_rank, t_svd, t_svd_reduced, tnn, tubal_rank


class TSVD(TransformerMixin, BaseEstimator):
    """Tensor SVD under the t-product.

    ``fit`` factorizes a ``(n1, n2, n3)`` tensor. ``transform`` maps a tensor
    with ``n1`` rows onto the left singular tensor, ``U^T * X``, and
    ``inverse_transform`` maps coefficients back with ``U * C``.

    Parameters
    ----------
    n_components : int or None
        Number of singular tubes kept. ``None`` keeps the full factorization.
    tol : float or None
        Relative tolerance for the rank attributes.

    Attributes
    ----------
    components_ : TSvdFactors
    tubal_rank_ : int
    multi_rank_ : ndarray of shape (n3,)
    tnn_ : float
    """

    def __init__(self, n_components=None, tol=None):
        self.n_components = n_components
        self.tol = tol

    def fit(self, X, y=None):
        X = check_tensor(X, name="X")
        if self.n_components is None:
            self.components_ = t_svd(X)
        else:
            self.components_ = t_svd_reduced(X, self.n_components)
        self.tubal_rank_ = tubal_rank(X, self.tol)
        self.multi_rank_ = multi_rank(X, self.tol)
        self.tnn_ = tnn(X)
        self.n_features_in_ = X.shape[0]
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_tensor(X, name="X")
        U = self.components_.U
        if X.shape[0] != U.shape[0] or X.shape[2] != U.shape[2]:
            raise ValueError(f"X has shape {X.shape}, expected ({U.shape[0]}, *, {U.shape[2]})")
        return t_product(t_transpose(U), X)

    def inverse_transform(self, C):
        check_is_fitted(self, "components_")
        return t_product(self.components_.U, check_tensor(C, name="C"))


class TensorCompleter(BaseEstimator):
    """Tensor completion by tensor-nuclear-norm minimization.

    Missing entries are either marked with NaN in ``X`` or given through
    ``mask`` (a boolean array or :class:`~tubal.sampling.SampleMask`).
    With ``sampling="tubal"`` the observed set must consist of whole tubes.
    """

    def __init__(self, sampling=ENTRYWISE, rho=None, max_iters=500,
                 tol_primal=1e-7, tol_dual=1e-7):
        self.sampling = sampling
        self.rho = rho
        self.max_iters = max_iters
        self.tol_primal = tol_primal
        self.tol_dual = tol_dual

    def _mask(self, X, mask):
        if isinstance(mask, SampleMask):
            return mask
        if mask is None:
            known = ~np.isnan(X)
        else:
            known = np.asarray(mask, dtype=bool)
            if known.shape != X.shape:
                raise ValueError(f"mask shape {known.shape} does not match X {X.shape}")
        frac = max(known.mean(), np.finfo(float).tiny)
        if self.sampling == TUBAL:
            tubes = known.all(axis=2)
            if not np.array_equal(known, np.broadcast_to(tubes[:, :, None], known.shape)):
                raise ValueError("tubal sampling needs every tube fully observed or fully missing")
            return SampleMask(TUBAL, X.shape, tubes, min(frac, 1.0), 0)
        if self.sampling != ENTRYWISE:
            raise ValueError(f"unknown sampling {self.sampling!r}")
        return SampleMask(ENTRYWISE, X.shape, known, min(frac, 1.0), 0)

    def fit(self, X, y=None, mask=None):
        X = np.asarray(X, dtype=float)
        m = self._mask(X, mask)
        observed = np.where(m.to_dense(), np.nan_to_num(X), 0.0)
        observed = check_tensor(observed, name="X")
        cfg = SolverConfig(rho=self.rho, max_iters=self.max_iters,
                           tol_primal=self.tol_primal, tol_dual=self.tol_dual)
        solve = complete_entrywise if m.kind == ENTRYWISE else complete_tubal
        self.completed_, self.report_ = solve(observed, m, cfg)
        self.mask_ = m
        return self

    def fit_transform(self, X, y=None, mask=None):
        return self.fit(X, mask=mask).completed_

    def transform(self, X=None):
        """Return the completed tensor from the last ``fit``."""
        check_is_fitted(self, "completed_")
        return self.completed_
