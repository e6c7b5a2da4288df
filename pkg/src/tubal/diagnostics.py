"""Incoherence measurements and numerical checks of the dual-certificate
conditions that guarantee exact recovery.

Wherever a single dimension ``n`` enters a threshold, ``min(n1, n2)`` is used.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .sampling import ENTRYWISE, SampleMask, TangentSpace, bernoulli_mask, p_omega, p_t, p_t_perp
from .tensor_core import fft3, frobenius, identity_tensor, infinity, linf_2star, t_product, t_transpose
from .tsvd import TSvdFactors, spectral_norm

ORTHO_TOL = 1e-8


@dataclass
class IncoherenceReport:
    mu0: float
    mu0_slices: np.ndarray = field(repr=False)
    max_col_U: float = 0.0
    argmax_U: int = 0
    max_col_V: float = 0.0
    argmax_V: int = 0
    rank: int = 0
    shape: tuple = ()

    def to_text(self):
        d = asdict(self)
        d["mu0_slices"] = ",".join(f"{v:.17g}" for v in self.mu0_slices)
        d["shape"] = "x".join(str(v) for v in self.shape)
        return "".join(f"{k}={_fmt(v)}\n" for k, v in d.items())


@dataclass
class CertificateReport:
    cond1: float
    cond2a: float
    cond2b: float
    t0: int
    n: int
    n3: int
    passed: bool = False
    cond1_threshold: float = 0.5
    cond2a_threshold: float = 0.0
    # looser 1/(4 n n3) level reached inside the uniqueness argument
    cond2a_threshold_lemma: float = 0.0
    cond2b_threshold: float = 0.5

    def __post_init__(self):
        self.cond2a_threshold = 1.0 / (4 * self.n * self.n3 ** 2)
        self.cond2a_threshold_lemma = 1.0 / (4 * self.n * self.n3)
        self.passed = bool(
            self.cond1 <= self.cond1_threshold
            and self.cond2a <= self.cond2a_threshold
            and self.cond2b <= self.cond2b_threshold
        )

    @property
    def slack(self):
        """Threshold minus measured value for each condition; negative means violated."""
        return {
            "cond1": self.cond1_threshold - self.cond1,
            "cond2a": self.cond2a_threshold - self.cond2a,
            "cond2b": self.cond2b_threshold - self.cond2b,
        }

    @property
    def passed_lemma(self):
        return bool(
            self.cond1 <= self.cond1_threshold
            and self.cond2a <= self.cond2a_threshold_lemma
            and self.cond2b <= self.cond2b_threshold
        )

    def to_text(self):
        d = asdict(self)
        d.update({f"slack_{k}": v for k, v in self.slack.items()})
        d["passed_lemma"] = self.passed_lemma
        return "".join(f"{k}={_fmt(v)}\n" for k, v in d.items())


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _factors(factors):
    if isinstance(factors, (TSvdFactors, TangentSpace)):
        return factors.U, factors.V
    U, V = factors
    return np.asarray(U, dtype=float), np.asarray(V, dtype=float)


def check_orthogonal(Q, tol=ORTHO_TOL, name="factor"):
    r, n3 = Q.shape[1], Q.shape[2]
    if r == 0:
        raise ValueError(f"{name} has no columns (rank 0)")
    err = frobenius(t_product(t_transpose(Q), Q) - identity_tensor(r, n3))
    if err > tol:
        raise ValueError(f"{name} is not orthogonal: ||Q^T*Q - I||_F = {err:.3e}")


def mu0(factors):
    """Standard tensor incoherence of orthogonal factors, plus the per-slice
    matrix weak incoherence of every Fourier slice.

    ``||U^T * e_i||_{2*}^2`` equals the mean over Fourier slices of the squared
    norm of row ``i`` of that slice, since each column basis transforms to an
    all-ones tube.
    """
    U, V = _factors(factors)
    check_orthogonal(U, name="U")
    check_orthogonal(V, name="V")
    n1, r, n3 = U.shape
    n2 = V.shape[0]
    rows_U = np.abs(fft3(U)) ** 2  # (n1, r, n3)
    rows_V = np.abs(fft3(V)) ** 2
    col_U = rows_U.sum(axis=(1, 2)) / n3  # ||U^T * e_i||_{2*}^2
    col_V = rows_V.sum(axis=(1, 2)) / n3
    iu, iv = int(np.argmax(col_U)), int(np.argmax(col_V))
    value = max(n1 / r * col_U[iu], n2 / r * col_V[iv])
    slices = np.maximum(
        n1 / r * rows_U.sum(axis=1).max(axis=0),
        n2 / r * rows_V.sum(axis=1).max(axis=0),
    )
    return IncoherenceReport(
        mu0=float(value),
        mu0_slices=slices,
        max_col_U=float(math.sqrt(col_U[iu])),
        argmax_U=iu,
        max_col_V=float(math.sqrt(col_V[iv])),
        argmax_V=iv,
        rank=r,
        shape=(n1, n2, n3),
    )


def sample_complexity_bound(n1, n2, n3, r, mu0, c0, clamp=True):
    """Sampling rate ``c0 * mu0 * r * log(n3 (n1 + n2)) / min(n1, n2)``.

    Clamped to 1 unless ``clamp=False``; a value of 1 means full sampling is
    required.
    """
    for name, v in (("n1", n1), ("n2", n2), ("n3", n3), ("r", r), ("mu0", mu0), ("c0", c0)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    p = c0 * mu0 * r * math.log(n3 * (n1 + n2)) / min(n1, n2)
    return min(p, 1.0) if clamp else p


def requires_full_sampling(n1, n2, n3, r, mu0, c0):
    return sample_complexity_bound(n1, n2, n3, r, mu0, c0, clamp=False) >= 1.0


def prop1_condition1(T, mask, p=None, iters=200, tol=1e-8, seed=0, method="lanczos"):
    """Estimate ``||P_T R_Omega P_T - P_T||_op``.

    The operator is self-adjoint on tensor space with the entrywise inner
    product. ``method="lanczos"`` runs ARPACK on it with ``iters`` restarts at
    most; ``method="power"`` runs plain power iteration for ``iters`` steps.
    """
    if mask.kind != ENTRYWISE:
        raise ValueError("condition 1 is defined for entrywise masks")
    p = mask.p if p is None else p
    dense = mask.to_dense()
    shape = T.shape

    def apply(Z):
        PZ = p_t(Z, T)
        return p_t(np.where(dense, PZ, 0.0) / p, T) - PZ

    rng = np.random.default_rng(seed)
    Z0 = rng.standard_normal(shape)
    if method == "power":
        return _power_norm(apply, Z0, iters, tol)
    if method != "lanczos":
        raise ValueError(f"unknown method {method!r}")
    N = int(np.prod(shape))
    op = LinearOperator(
        (N, N), matvec=lambda v: apply(v.reshape(shape)).ravel(), dtype=float
    )
    try:
        vals = eigsh(op, k=1, which="LM", v0=Z0.ravel(), tol=tol,
                     maxiter=iters * N, return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        vals = exc.eigenvalues
        if len(vals) == 0:
            return _power_norm(apply, Z0, iters, tol)
    return float(np.abs(vals).max())


def _power_norm(apply, Z, iters, tol):
    Z = Z / np.linalg.norm(Z)
    est = 0.0
    for _ in range(iters):
        W = apply(Z)
        nrm = np.linalg.norm(W)
        if nrm == 0.0:
            return 0.0
        done = abs(nrm - est) <= tol * max(nrm, 1.0)
        est = nrm
        Z = W / nrm
        if done:
            break
    return float(est)


def golfing_batches(n1, n2, n3, p, seed=0, t0=None):
    """Split a Bernoulli(p) sample into ``t0`` independent Bernoulli(q) batches,
    ``q = 1 - (1 - p)**(1 / t0)``, ``t0 = ceil(20 log(n n3))`` by default."""
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if t0 is None:
        t0 = default_t0(n1, n2, n3)
    q = 1.0 - (1.0 - p) ** (1.0 / t0)
    seeds = np.random.SeedSequence(seed).generate_state(t0)
    return [bernoulli_mask(n1, n2, n3, q, int(s)) for s in seeds]


def default_t0(n1, n2, n3):
    return max(1, math.ceil(20 * math.log(min(n1, n2) * n3)))


def union_mask(batches, p=None):
    dense = np.zeros(batches[0].shape, dtype=bool)
    for b in batches:
        dense |= b.to_dense()
    p = batches[0].p if p is None else p
    return SampleMask(ENTRYWISE, batches[0].shape, dense, p, batches[0].seed)


def golfing_certificate(T, p, seed=0, t0=None, return_history=False):
    """Build a dual certificate ``Y`` supported on the union of the batches via
    ``W_t = W_{t-1} + R_{Omega_t} P_T(U*V^T - P_T(W_{t-1}))``.

    Returns ``(Y, batches)``; with ``return_history=True`` also the list of
    ``||U*V^T - P_T(W_t)||_F`` for ``t = 0..t0``.
    """
    batches = golfing_batches(*T.shape, p, seed=seed, t0=t0)
    E = T.uv()
    W = np.zeros(T.shape)
    D = E.copy()
    history = [frobenius(D)]
    for b in batches:
        W = W + np.where(b.to_dense(), p_t(D, T), 0.0) / b.p
        D = E - p_t(W, T)
        history.append(frobenius(D))
    if return_history:
        return W, batches, history
    return W, batches


def certificate_report(Y, T, mask, p=None, t0=0, cond1=None, **cond1_kw):
    """Evaluate both conditions that certify ``M`` as the unique minimizer."""
    n1, n2, n3 = T.shape
    if cond1 is None:
        cond1 = prop1_condition1(T, mask, p, **cond1_kw)
    cond2a = frobenius(p_t(Y, T) - T.uv())
    cond2b = spectral_norm(p_t_perp(Y, T))
    return CertificateReport(float(cond1), float(cond2a), float(cond2b), int(t0), min(n1, n2), n3)


def uv_bounds(T):
    """Measured ``(||U*V^T||_inf, ||U*V^T||_{inf,2*})``."""
    if T.U.shape[1] == 0 or T.V.shape[1] == 0:
        raise ValueError("empty factors (rank 0)")
    E = T.uv()
    return infinity(E), linf_2star(E)


def basis_projection_norms(T):
    """``||P_T(e_i * e_k * e_j^T)||_F^2`` for every ``(i, j, k)``.

    Uses ``||P_T(E)||^2 = ||UU^T*E||^2 + ||E*VV^T||^2 - ||UU^T*E*VV^T||^2``;
    for a unit tensor at ``(i, j, k)`` the three terms are the squared column
    norms ``|U^T*e_i|^2``, ``|V^T*e_j|^2`` and the squared ``(i, j)`` entry tube
    norm of the projector product, all independent of ``k`` up to a circular
    shift.
    """
    PU, PV = T.projectors()
    n1, n2, n3 = T.shape
    a = (PU[:, :, 0].diagonal())  # |U^T * e_i|_F^2 = (UU^T)_{ii0}
    b = (PV[:, :, 0].diagonal())
    # |UU^T * E * VV^T|_F^2 with E = e_i * e_k * e_j^T equals
    # sum_{a,b,t} (circular conv of PU[a,i,:] and PV[j,b,:])^2
    PU_hat = fft3(PU)
    PV_hat = fft3(PV)
    # tube (a,b) of PU(:,i,:) * PV(j,:,:); squared norm = (1/n3) sum_k |PU_hat[a,i,k]|^2 |PV_hat[j,b,k]|^2
    cu = np.abs(PU_hat) ** 2  # (n1, n1, n3)
    cv = np.abs(PV_hat) ** 2  # (n2, n2, n3)
    c = np.einsum("aik,jbk->ijk", cu, cv).sum(axis=2) / n3  # (n1, n2)
    sq = a[:, None] + b[None, :] - c
    return np.broadcast_to(sq[:, :, None], (n1, n2, n3))
