"""Low-tubal-rank tensor completion with the t-SVD."""

from .completion import SolveReport, SolverConfig, complete_entrywise, complete_matrix, complete_tubal, rse
from .estimators import TensorCompleter, TSVD
from .sampling import SampleMask, TangentSpace, bernoulli_mask, p_omega, p_t, p_t_perp, r_omega, tubal_mask
from .tensor_core import (
    column_basis,
    fft3,
    frobenius,
    identity_tensor,
    ifft3,
    infinity,
    inner_product,
    l2star,
    linf_2star,
    t_product,
    t_transpose,
    tube_basis,
    unit_tensor,
)
from .tsvd import TSvdFactors, multi_rank, spectral_norm, t_svd, t_svd_reduced, t_svt, tnn, tubal_rank

__version__ = "0.1.0"
