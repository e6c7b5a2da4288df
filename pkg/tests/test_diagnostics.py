import math

import numpy as np
import pytest
from scipy.linalg import hadamard

from conftest import random_tangent
from tubal.diagnostics import (IncoherenceReport, basis_projection_norms, certificate_report, check_orthogonal,
                               default_t0, golfing_batches, golfing_certificate, mu0, prop1_condition1,
                               requires_full_sampling, sample_complexity_bound, union_mask, uv_bounds)
from tubal.sampling import SampleMask, TangentSpace, bernoulli_mask, full_mask, p_omega, p_t
from tubal.tensor_core import column_basis, frobenius, identity_tensor, l2star, t_product, t_transpose, unit_tensor


def _flat_factors(n, r, n3):
    # every Fourier slice equals the same Hadamard columns
    H = hadamard(n)[:, :r] / math.sqrt(n)
    U = np.zeros((n, r, n3))
    U[:, :, 0] = H
    return U


def test_mu0_minimum():
    U = _flat_factors(8, 2, 5)
    rep = mu0((U, U))
    assert rep.mu0 == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(rep.mu0_slices, 1.0, atol=1e-12)


def test_mu0_maximum():
    n, r, n3 = 6, 2, 4
    U = identity_tensor(n, n3)[:, :r]
    _, T = random_tangent(n, n, n3, r, seed=1)
    rep = mu0((U, T.V))
    assert rep.mu0 == pytest.approx(n / r)
    assert rep.argmax_U in (0, 1) and rep.max_col_U == pytest.approx(1.0)


def test_mu0_matches_t_product_definition():
    f, _ = random_tangent(9, 7, 4, 3, seed=2)
    rep = mu0(f)
    col = max(l2star(t_product(t_transpose(f.U), column_basis(i, 9, 4))) for i in range(9))
    row = max(l2star(t_product(t_transpose(f.V), column_basis(j, 7, 4))) for j in range(7))
    assert rep.max_col_U == pytest.approx(col, rel=1e-10)
    assert rep.max_col_V == pytest.approx(row, rel=1e-10)
    assert rep.mu0 == pytest.approx(max(9 / 3 * col ** 2, 7 / 3 * row ** 2), rel=1e-10)


def test_mu0_random_factors():
    for seed in range(10):
        f, _ = random_tangent(30, 30, 20, 2, seed)
        rep = mu0(f)
        assert 1 <= rep.mu0 <= 15
        assert rep.mu0 <= rep.mu0_slices.max() + 1e-9


def test_mu0_rejects_non_orthogonal():
    U = np.random.default_rng(0).standard_normal((5, 2, 3))
    with pytest.raises(ValueError):
        mu0((U, U))
    with pytest.raises(ValueError):
        check_orthogonal(np.zeros((4, 0, 3)))


def test_incoherence_text():
    f, _ = random_tangent(6, 6, 3, 2, seed=0)
    text = mu0(f).to_text()
    keys = [line.split("=")[0] for line in text.splitlines()]
    assert keys[0] == "mu0" and "mu0_slices" in keys


def test_sample_complexity_bound():
    b1 = sample_complexity_bound(100, 100, 10, 1, 1.0, 0.1, clamp=False)
    b2 = sample_complexity_bound(100, 100, 10, 2, 1.0, 0.1, clamp=False)
    assert b2 == pytest.approx(2 * b1)
    n, n3, c0, m, r = 40, 6, 0.3, 1.7, 2
    assert sample_complexity_bound(n, n, n3, r, m, c0) == pytest.approx(c0 * m * r * math.log(2 * n * n3) / n)
    assert sample_complexity_bound(10, 10, 10, 5, 2.0, 1.0) == 1.0
    assert requires_full_sampling(10, 10, 10, 5, 2.0, 1.0)
    assert not requires_full_sampling(100, 100, 10, 1, 1.0, 0.1)
    with pytest.raises(ValueError):
        sample_complexity_bound(10, 10, 10, 0, 1.0, 1.0)


def _dense_operator_norm(T, mask, p):
    n1, n2, n3 = T.shape
    N = n1 * n2 * n3
    A = np.zeros((N, N))
    for c in range(N):
        e = np.zeros(N)
        e[c] = 1
        Z = e.reshape(T.shape)
        PZ = p_t(Z, T)
        A[:, c] = (p_t(p_omega(PZ, mask) / p, T) - PZ).ravel()
    assert np.abs(A - A.T).max() <= 1e-12
    return np.abs(np.linalg.eigvalsh(A)).max()


@pytest.mark.parametrize("method", ["lanczos", "power"])
def test_condition1_matches_dense_oracle(method):
    _, T = random_tangent(5, 4, 3, 1, seed=3)
    m = bernoulli_mask(5, 4, 3, 0.6, seed=4)
    want = _dense_operator_norm(T, m, 0.6)
    tol = 1e-8 if method == "lanczos" else 1e-3
    assert prop1_condition1(T, m, method=method, iters=2000) == pytest.approx(want, rel=tol)


def test_condition1_degenerate_masks():
    _, T = random_tangent(8, 8, 4, 2, seed=5)
    assert prop1_condition1(T, full_mask(8, 8, 4)) <= 1e-8
    empty = SampleMask("entrywise", (8, 8, 4), np.zeros((8, 8, 4), bool), 0.5)
    assert prop1_condition1(T, empty) == pytest.approx(1.0, abs=1e-8)


def test_condition1_start_vector_invariance():
    _, T = random_tangent(10, 10, 4, 2, seed=6)
    m = bernoulli_mask(10, 10, 4, 0.5, seed=7)
    vals = [prop1_condition1(T, m, seed=s) for s in range(3)]
    assert max(vals) - min(vals) <= 1e-6


def test_golfing_batches():
    assert default_t0(30, 30, 20) == math.ceil(20 * math.log(600))
    b = golfing_batches(10, 10, 4, 0.5, seed=1, t0=5)
    assert len(b) == 5
    assert b[0].p == pytest.approx(1 - 0.5 ** (1 / 5))
    assert golfing_batches(10, 10, 4, 0.5, seed=1, t0=5)[3] == b[3]


def test_golfing_support_and_fixed_point():
    _, T = random_tangent(10, 10, 4, 2, seed=8)
    Y, batches = golfing_certificate(T, 0.4, seed=3, t0=6)
    assert not Y[~union_mask(batches).to_dense()].any()
    Y, batches = golfing_certificate(T, 1.0, seed=3, t0=1)
    np.testing.assert_allclose(Y, T.uv(), atol=1e-12)
    rep = certificate_report(Y, T, union_mask(batches), 1.0, t0=1)
    assert rep.cond2a <= 1e-12 and rep.cond2b <= 1e-12 and rep.cond1 <= 1e-8
    assert rep.passed


def test_golfing_contraction_when_condition1_holds():
    # dense batches so each batch operator is a contraction
    _, T = random_tangent(10, 10, 4, 1, seed=9)
    Y, batches, hist = golfing_certificate(T, 0.999, seed=1, t0=3, return_history=True)
    checked = 0
    for t, b in enumerate(batches, 1):
        if prop1_condition1(T, b) < 0.5:
            checked += 1
            assert hist[t] <= 0.5 * hist[t - 1] + 1e-12
    assert checked > 0


def test_certificate_zero_y():
    f, T = random_tangent(8, 8, 3, 2, seed=10)
    rep = certificate_report(np.zeros(T.shape), T, full_mask(8, 8, 3), 1.0)
    assert rep.cond2a == pytest.approx(math.sqrt(2), rel=1e-10)
    assert rep.cond2b == 0.0
    assert not rep.passed
    assert rep.cond2a_threshold == pytest.approx(1 / (4 * 8 * 9))
    assert rep.cond2a_threshold_lemma == pytest.approx(1 / (4 * 8 * 3))
    assert rep.slack["cond2a"] < 0
    assert "passed=False" in rep.to_text()


def test_uv_bounds_identity_factors():
    n, r, n3 = 6, 2, 3
    U = identity_tensor(n, n3)[:, :r]
    T = TangentSpace(U, U)
    inf, inf2 = uv_bounds(T)
    m = mu0((U, U)).mu0
    assert m == pytest.approx(n / r)
    assert inf == pytest.approx(1.0) == pytest.approx(m * r / n)
    with pytest.raises(ValueError):
        uv_bounds(TangentSpace(np.zeros((n, 0, n3)), np.zeros((n, 0, n3))))


def test_uv_bounds_sweep():
    for seed in range(200):
        r = (1, 2, 4)[seed % 3]
        n3 = (3, 8)[seed % 2]
        f, T = random_tangent(20, 20, n3, r, seed)
        m = mu0(f).mu0
        inf, inf2 = uv_bounds(T)
        assert inf <= m * r / 20 + 1e-12
        assert inf2 <= math.sqrt(m * r / 20) + 1e-12


def test_basis_projection_norms_match_direct():
    f, T = random_tangent(6, 5, 4, 2, seed=11)
    bp = basis_projection_norms(T)
    for i, j, k in [(0, 0, 0), (5, 4, 3), (2, 1, 2)]:
        assert bp[i, j, k] == pytest.approx(frobenius(p_t(unit_tensor(i, j, k, 6, 5, 4), T)) ** 2, rel=1e-10)
