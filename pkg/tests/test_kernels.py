import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from mep3.kernels import (KernelError, block_arnoldi, cond_estimate, gmres, kron3, lu_solver,
                          mode_mul, orthonormality_error, orthonormalize, rgs_expand,
                          svd_filter, unvec, vec)

seeds = st.integers(0, 2 ** 32 - 1)


@given(seeds, st.tuples(*[st.integers(1, 4)] * 3))
def test_mode_products_match_kronecker(seed, dims):
    rng = np.random.default_rng(seed)
    t = rng.standard_normal(dims)
    ms = [rng.standard_normal((d, d)) for d in dims]
    out = t
    for k, m in enumerate(ms, start=1):
        out = mode_mul(out, m, k)
    assert np.allclose(vec(out), kron3(*ms) @ vec(t))


@given(seeds)
def test_vec_of_outer_product_is_kron(seed):
    rng = np.random.default_rng(seed)
    x = [rng.standard_normal(n) for n in (2, 3, 4)]
    t = np.einsum("i,j,k->ijk", *x)
    assert np.allclose(vec(t), np.kron(x[0], np.kron(x[1], x[2])))
    assert np.array_equal(unvec(vec(t), t.shape), t)


def test_unvec_and_mode_errors():
    with pytest.raises(KernelError):
        unvec(np.zeros(5), (2, 2))
    with pytest.raises(KernelError):
        mode_mul(np.zeros((2, 2, 2)), np.eye(3), 1)
    with pytest.raises(KernelError):
        mode_mul(np.zeros((2, 2, 2)), np.eye(2), 4)


@given(seeds, st.integers(2, 12), st.booleans())
def test_rgs_expand_keeps_orthonormal(seed, n, cplx):
    rng = np.random.default_rng(seed)
    q = None
    for _ in range(n):
        v = rng.standard_normal(n) + (1j * rng.standard_normal(n) if cplx else 0)
        q, ok = rgs_expand(q, v)
        assert ok
    assert q.shape == (n, n)
    assert orthonormality_error(q) < 1e-12
    # a vector already in the span is rejected
    q2, ok = rgs_expand(q[:, :2], q[:, 0] + q[:, 1])
    assert not ok and q2.shape[1] == 2


def test_orthonormalize_drops_dependent_columns(rng):
    a = rng.standard_normal((6, 3))
    q = orthonormalize(np.column_stack([a, a[:, 0] + 2 * a[:, 1]]))
    assert q.shape == (6, 3)


@given(seeds, st.floats(1e-6, 0.5))
def test_svd_filter_threshold(seed, zeta):
    rng = np.random.default_rng(seed)
    u = np.linalg.qr(rng.standard_normal((10, 5)))[0]
    s = np.array([1.0, 0.3, 1e-2, 1e-4, 1e-7])
    # a threshold sitting on a singular value is decided by rounding
    assume(np.all(np.abs(np.log(s / zeta)) > 1e-8))
    f = u * s
    w = svd_filter(f, zeta)
    assert w.shape[1] == max(1, int(np.sum(s >= zeta)))
    assert orthonormality_error(w) < 1e-12


def test_svd_filter_rejects_zero():
    with pytest.raises(KernelError):
        svd_filter(np.zeros((3, 2)), 0.1)


@given(seeds, st.integers(0, 3), st.integers(1, 3))
def test_block_arnoldi_span_and_orthonormality(seed, r, width):
    rng = np.random.default_rng(seed)
    n = 12
    b = rng.standard_normal((n, n))
    c = rng.standard_normal((n, n))
    f = rng.standard_normal((n, width))
    q = block_arnoldi(b, c, f, r, 1e-12)
    assert orthonormality_error(q) < 1e-10
    proj = lambda x: x - q @ (q.T @ x)  # noqa: E731
    # F, BF, CF, ... up to degree r lie in the span
    blocks = [f]
    for _ in range(r):
        if q.shape[1] == n:
            break
        blocks = [m @ x for x in blocks for m in (b, c)]
        # only test degrees that fit entirely
        if sum(x.shape[1] for x in blocks) + width > n:
            break
    for x in [f] + (blocks if q.shape[1] < n else []):
        assert np.linalg.norm(proj(x)) <= 1e-10 * max(1.0, np.linalg.norm(x))


def test_block_arnoldi_degree_one_exact(rng):
    b = rng.standard_normal((10, 10))
    c = rng.standard_normal((10, 10))
    f = rng.standard_normal((10, 2))
    q = block_arnoldi(b, c, f, 1, 1e-14)
    assert q.shape == (10, 6)
    for x in (f, b @ f, c @ f):
        assert np.linalg.norm(x - q @ (q.T @ x)) < 1e-10 * np.linalg.norm(x)


def test_block_arnoldi_respects_max_cols(rng):
    b = rng.standard_normal((10, 10))
    q = block_arnoldi(b, b.T, rng.standard_normal((10, 2)), 4, 1e-14, max_cols=5)
    assert q.shape[1] == 5


@given(seeds, st.integers(1, 8), st.booleans())
def test_gmres_exact_in_n_steps(seed, n, use_pc):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + n * np.eye(n)
    b = rng.standard_normal(n)
    pc = np.linalg.inv(a + 0.1 * rng.standard_normal((n, n))) if use_pc else None
    res = gmres(a, b, pc, max_steps=n)
    assert np.linalg.norm(a @ res.x - b) <= 1e-9 * np.linalg.norm(b)


def test_gmres_residual_is_monotone(rng):
    a = rng.standard_normal((30, 30)) + 8 * np.eye(30)
    b = rng.standard_normal(30)
    prev = np.inf
    for k in range(1, 10):
        r = gmres(a, b, max_steps=k).residual
        assert r <= prev + 1e-14
        prev = r


def test_gmres_zero_rhs():
    res = gmres(np.eye(3), np.zeros(3))
    assert res.steps == 0 and not np.any(res.x)


def test_lu_solver_and_cond(rng):
    a = rng.standard_normal((8, 8)) + 4 * np.eye(8)
    b = rng.standard_normal(8)
    assert np.allclose(a @ lu_solver(a)(b), b)
    exact = np.linalg.cond(a, 1)
    est = cond_estimate(a)
    assert exact / 3 <= est <= exact * 3
    assert cond_estimate(np.zeros((3, 3))) == np.inf
