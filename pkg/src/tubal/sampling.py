"""Sampling masks, the observation operators and the tangent-space projections."""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_probability, check_same_shape, check_tensor
from .tensor_core import t_product, t_transpose
from .tsvd import TSvdFactors

ENTRYWISE = "entrywise"
TUBAL = "tubal"


@dataclass(frozen=True)
class SampleMask:
    """Observed set Omega.

    ``membership`` has shape ``(n1, n2, n3)`` for entrywise masks and
    ``(n1, n2)`` for tubal masks, where a selected ``(i, j)`` observes the
    whole tube.
    """

    kind: str
    shape: tuple
    membership: np.ndarray = field(repr=False)
    p: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (ENTRYWISE, TUBAL):
            raise ValueError(f"unknown mask kind {self.kind!r}")
        check_probability(self.p)
        want = self.shape if self.kind == ENTRYWISE else self.shape[:2]
        if tuple(self.membership.shape) != tuple(want):
            raise ValueError(
                f"membership shape {self.membership.shape} does not match {want}"
            )

    def to_dense(self):
        """Boolean array of shape ``(n1, n2, n3)``."""
        if self.kind == ENTRYWISE:
            return self.membership
        return np.broadcast_to(self.membership[:, :, None], self.shape)

    @property
    def n_observed(self):
        return int(self.to_dense().sum())

    def __eq__(self, other):
        if not isinstance(other, SampleMask):
            return NotImplemented
        return (
            self.kind == other.kind
            and tuple(self.shape) == tuple(other.shape)
            and self.p == other.p
            and self.seed == other.seed
            and np.array_equal(self.membership, other.membership)
        )

    __hash__ = None


def bernoulli_mask(n1, n2, n3, p, seed=0):
    """Each entry observed independently with probability ``p``."""
    p = check_probability(p)
    rng = np.random.default_rng(seed)
    membership = rng.random((n1, n2, n3)) < p
    return SampleMask(ENTRYWISE, (n1, n2, n3), membership, p, seed)


def tubal_mask(n1, n2, n3, p, seed=0):
    """Each tube ``(i, j, :)`` observed independently with probability ``p``."""
    p = check_probability(p)
    rng = np.random.default_rng(seed)
    membership = rng.random((n1, n2)) < p
    return SampleMask(TUBAL, (n1, n2, n3), membership, p, seed)


def full_mask(n1, n2, n3, kind=ENTRYWISE):
    shape = (n1, n2, n3) if kind == ENTRYWISE else (n1, n2)
    return SampleMask(kind, (n1, n2, n3), np.ones(shape, dtype=bool), 1.0, 0)


def p_omega(Z, mask):
    """Keep observed entries, zero elsewhere."""
    Z = check_tensor(Z)
    if Z.shape != tuple(mask.shape):
        raise ValueError(f"shape mismatch: {Z.shape} vs mask {mask.shape}")
    return np.where(mask.to_dense(), Z, 0.0)


def r_omega(Z, mask, p=None):
    """Rescaled restriction ``p_omega(Z) / p``; unbiased for ``Z``."""
    p = mask.p if p is None else check_probability(p)
    return p_omega(Z, mask) / p


@dataclass(frozen=True)
class TangentSpace:
    """Tangent space spanned by orthogonal factors ``U`` (``n1 x r x n3``) and
    ``V`` (``n2 x r x n3``)."""

    U: np.ndarray
    V: np.ndarray

    @classmethod
    def from_factors(cls, factors: TSvdFactors):
        return cls(factors.U, factors.V)

    @property
    def shape(self):
        return (self.U.shape[0], self.V.shape[0], self.U.shape[2])

    @property
    def rank(self):
        return self.U.shape[1]

    def projectors(self):
        """``(U * U^T, V * V^T)``, cached on first use."""
        cached = self.__dict__.get("_proj")
        if cached is None:
            cached = (
                t_product(self.U, t_transpose(self.U)),
                t_product(self.V, t_transpose(self.V)),
            )
            object.__setattr__(self, "_proj", cached)
        return cached

    def uv(self):
        """``U * V^T``."""
        return t_product(self.U, t_transpose(self.V))


def _check_tangent(Z, T):
    Z = check_tensor(Z)
    if Z.shape != T.shape:
        raise ValueError(f"shape mismatch: {Z.shape} vs tangent space {T.shape}")
    return Z


def p_t(Z, T):
    """``UU^T*Z + Z*VV^T - UU^T*Z*VV^T``."""
    Z = _check_tangent(Z, T)
    PU, PV = T.projectors()
    UZ = t_product(PU, Z)
    return UZ + t_product(Z, PV) - t_product(UZ, PV)


def p_t_perp(Z, T):
    """``(I - UU^T) * Z * (I - VV^T)``."""
    Z = _check_tangent(Z, T)
    PU, PV = T.projectors()
    left = Z - t_product(PU, Z)
    return left - t_product(left, PV)
