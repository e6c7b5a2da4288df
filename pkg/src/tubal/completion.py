"""Tensor completion by tensor-nuclear-norm minimization.

Entrywise sampling is solved with ADMM on the splitting ``X = Z``, where the
``Z`` step is :func:`~tubal.tsvd.t_svt` and the ``X`` step re-imposes the
observed entries. Tubal sampling decouples in the Fourier domain into one
matrix completion per frontal slice, each solved by the same ADMM with matrix
singular value thresholding.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_same_shape, check_tensor
from .sampling import ENTRYWISE, TUBAL, p_omega
from .tensor_core import fft3, ifft3
from .tsvd import _fill_conjugate, _is_self_conjugate, svt_matrix, t_svt, tnn

logger = logging.getLogger(__name__)


@dataclass
class SolverConfig:
    """ADMM settings.

    ``rho=None`` picks ``1 / std(observed entries)`` per problem.
    """

    rho: float = None
    max_iters: int = 500
    tol_primal: float = 1e-7
    tol_dual: float = 1e-7
    verbose: bool = False
    track_objective: bool = False

    def __post_init__(self):
        if self.rho is not None and not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not (self.tol_primal > 0 and self.tol_dual > 0):
            raise ValueError("tolerances must be positive")


@dataclass
class SolveReport:
    iterations: int = 0
    primal_residuals: list = field(default_factory=list)
    dual_residuals: list = field(default_factory=list)
    # ||P_omega(Z) - observed||_F / ||observed||_F for the low-rank iterate
    rse_observed: float = 0.0
    converged: bool = False
    # tnn of the feasible iterate X, filled when SolverConfig.track_objective is set
    objective: list = field(default_factory=list)
    slice_converged: list = None


class EmptyMaskError(ValueError):
    pass


def rse(X, M):
    """Relative square error ``||X - M||_F / ||M||_F``."""
    X = np.asarray(X, dtype=float)
    M = np.asarray(M, dtype=float)
    check_same_shape(X, M)
    ref = np.linalg.norm(M)
    if ref == 0:
        raise ValueError("rse: reference tensor is zero")
    return float(np.linalg.norm(X - M) / ref)


def default_rho(values):
    sd = float(np.std(values))
    return 1.0 / sd if sd > 0 else 1.0


def _check_inputs(observed, mask, kind):
    observed = check_tensor(observed, name="observed")
    if observed.shape != tuple(mask.shape):
        raise ValueError(f"shape mismatch: {observed.shape} vs mask {mask.shape}")
    if mask.kind != kind:
        raise ValueError(f"expected a {kind} mask, got {mask.kind}")
    dense = mask.to_dense()
    # below the n1 + n2 - 1 degrees of freedom of one rank-1 slice the solve is vacuous
    n1, n2, _ = observed.shape
    if dense.sum() < n1 + n2 - 1:
        raise EmptyMaskError(
            f"mask observes {int(dense.sum())} entries; at least {n1 + n2 - 1} required"
        )
    return observed, dense


def _admm(observed, dense, prox, rho, cfg, norm_fn=np.linalg.norm, objective=None):
    """Generic ADMM for ``min f(Z)`` s.t. ``Z = X`` and ``X`` agrees with the data on ``dense``.

    ``prox(W)`` returns ``argmin f(Z) + rho/2 ||Z - W||^2``.
    """
    report = SolveReport()
    data = observed[dense]
    X = np.where(dense, observed, 0)
    Z = X.copy()
    Y = np.zeros_like(X)  # scaled dual
    best = None
    for it in range(1, cfg.max_iters + 1):
        Z_prev = Z
        Z = prox(X + Y)
        X = Z - Y
        X[dense] = data
        Y = Y + X - Z
        nx, nz = norm_fn(X), norm_fn(Z)
        primal = norm_fn(X - Z) / max(nx, nz, 1e-300)
        ny = norm_fn(Y)
        dual = rho * norm_fn(Z - Z_prev) / max(rho * ny, 1e-300)
        report.primal_residuals.append(float(primal))
        report.dual_residuals.append(float(dual))
        if objective is not None:
            report.objective.append(objective(X))
        if cfg.verbose:
            logger.info("iter %d primal %.3e dual %.3e", it, primal, dual)
        if best is None or primal < best[0]:
            best = (primal, X.copy(), Z.copy())
        report.iterations = it
        if primal <= cfg.tol_primal and dual <= cfg.tol_dual:
            report.converged = True
            break
    if not report.converged:
        _, X, Z = best
    ref = max(np.linalg.norm(data), 1e-300)
    report.rse_observed = float(np.linalg.norm(Z[dense] - data) / ref)
    return X, report


def complete_entrywise(observed, mask, cfg=None):
    """Minimize ``tnn(X)`` subject to ``X`` matching ``observed`` on ``mask``.

    Returns the completed tensor and a :class:`SolveReport`. The observed
    entries of the output equal the data exactly.
    """
    cfg = cfg or SolverConfig()
    observed, dense = _check_inputs(observed, mask, ENTRYWISE)
    if dense.all():
        report = SolveReport(1, [0.0], [0.0], 0.0, True)
        return observed.copy(), report
    rho = cfg.rho or default_rho(observed[dense])
    n3 = observed.shape[2]
    objective = tnn if cfg.track_objective else None
    X, report = _admm(observed, dense, lambda W: t_svt(W, n3 / rho), rho, cfg,
                      objective=objective)
    return X, report


def complete_matrix(observed, known, cfg=None, real=False):
    """Nuclear-norm matrix completion of a real or complex matrix.

    ``known`` is a boolean matrix of observed positions.
    """
    cfg = cfg or SolverConfig()
    observed = np.asarray(observed)
    known = np.asarray(known, dtype=bool)
    if known.all():
        return observed.copy(), SolveReport(1, [0.0], [0.0], 0.0, True)
    if not known.any():
        raise EmptyMaskError("no observed entries")
    rho = cfg.rho or default_rho(np.abs(observed[known]))
    return _admm(observed, known, lambda W: svt_matrix(W, 1.0 / rho, real=real),
                 rho, cfg)


def complete_tubal(observed, mask, cfg=None):
    """Complete a tensor observed on whole tubes.

    Every Fourier slice shares the tube pattern, so the problem splits into
    ``n3`` independent matrix completions; slices past ``n3 // 2`` follow by
    conjugate symmetry.
    """
    cfg = cfg or SolverConfig()
    observed, dense = _check_inputs(observed, mask, TUBAL)
    if dense.all():
        report = SolveReport(1, [0.0], [0.0], 0.0, True, slice_converged=[True] * observed.shape[2])
        return observed.copy(), report
    known = mask.membership
    n3 = observed.shape[2]
    obs_hat = fft3(p_omega(observed, mask))
    out = np.zeros_like(obs_hat)
    reports = {}
    for k in range(n3 // 2 + 1):
        real = _is_self_conjugate(k, n3)
        sl = obs_hat[:, :, k].real if real else obs_hat[:, :, k]
        Xk, rep = complete_matrix(sl, known, cfg, real=real)
        out[:, :, k] = Xk
        reports[k] = rep
    _fill_conjugate(out)
    X = ifft3(out)
    X[dense] = observed[dense]
    per_slice = [reports[min(k, n3 - k)] for k in range(n3)]
    report = SolveReport(
        iterations=max(r.iterations for r in per_slice),
        primal_residuals=[max(r.primal_residuals[-1] for r in per_slice)],
        dual_residuals=[max(r.dual_residuals[-1] for r in per_slice)],
        rse_observed=float(np.linalg.norm(p_omega(X, mask) - p_omega(observed, mask))
                           / max(np.linalg.norm(observed[dense]), 1e-300)),
        converged=all(r.converged for r in per_slice),
        slice_converged=[r.converged for r in per_slice],
    )
    return X, report
