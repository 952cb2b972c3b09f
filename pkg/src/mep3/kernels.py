"""Dense linear-algebra building blocks shared by the solvers.

Vectorization convention: for a tensor ``T`` of shape ``(n1, n2, n3)``,
``vec(T)`` is the C-order ravel, i.e. the third index varies fastest. With
this convention ``vec(x1 o x2 o x3) == kron(x1, kron(x2, x3))`` and
``vec(T x1 A x2 B x3 C) == kron(A, kron(B, C)) @ vec(T)``.
"""
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

ORTHO_TOL = 1e-12


class KernelError(ValueError):
    pass


def kron(a, b):
    return np.kron(np.atleast_2d(a), np.atleast_2d(b))


def kron3(a, b, c):
    return np.kron(a, np.kron(b, c))


def vec(t):
    return np.asarray(t).reshape(-1)


def unvec(v, dims):
    v = np.asarray(v)
    if v.size != int(np.prod(dims)):
        raise KernelError(f"cannot reshape {v.size} entries into {tuple(dims)}")
    return v.reshape(dims)


def mode_mul(t, m, mode):
    """Mode-``mode`` product ``T x_mode M`` (``mode`` in 1, 2, 3)."""
    t = np.asarray(t)
    m = np.atleast_2d(m)
    if mode not in (1, 2, 3):
        raise KernelError(f"mode must be 1, 2 or 3, got {mode}")
    ax = mode - 1
    if m.shape[1] != t.shape[ax]:
        raise KernelError(
            f"mode-{mode} product: matrix has {m.shape[1]} columns, tensor dim is {t.shape[ax]}")
    out = np.tensordot(m, t, axes=([1], [ax]))
    return np.moveaxis(out, 0, ax)


def orthonormality_error(q):
    q = np.asarray(q)
    return np.linalg.norm(q.conj().T @ q - np.eye(q.shape[1]))


def _result_dtype(*arrays):
    return np.result_type(*arrays, np.float64)


def rgs_expand(u, v, tol=ORTHO_TOL):
    """Append ``v`` to the orthonormal basis ``u`` by classical Gram-Schmidt twice.

    Returns ``(basis, expanded)``. If the component of ``v`` orthogonal to
    ``span(u)`` has norm below ``tol * ||v||`` the basis is returned unchanged
    and ``expanded`` is False.
    """
    v = np.asarray(v).reshape(-1)
    nv = np.linalg.norm(v)
    if nv == 0:
        raise KernelError("cannot expand a basis with the zero vector")
    if u is None or u.shape[1] == 0:
        return (v / nv).reshape(-1, 1), True
    if u.shape[0] != v.shape[0]:
        raise KernelError(f"row mismatch: basis has {u.shape[0]} rows, vector has {v.shape[0]}")
    w = v.astype(_result_dtype(u, v), copy=True)
    for _ in range(2):
        w -= u @ (u.conj().T @ w)
    nw = np.linalg.norm(w)
    if nw < tol * nv or u.shape[1] >= u.shape[0]:
        return u, False
    return np.hstack([u.astype(w.dtype, copy=False), (w / nw)[:, None]]), True


def orthonormalize(vectors, tol=ORTHO_TOL):
    """Orthonormal basis of the given columns, dropping dependent ones."""
    q = None
    for col in np.asarray(vectors).T:
        if np.linalg.norm(col) == 0:
            continue
        q, _ = rgs_expand(q, col, tol)
    return q


def svd_filter(f, zeta, floor=None):
    """Left singular vectors of ``f`` with ``sigma_j >= zeta * sigma_1``.

    Singular values below ``floor`` (default: numerical rank threshold) are
    always dropped. At least one column is kept for nonzero ``f``.
    """
    f = np.atleast_2d(f)
    if not np.any(f):
        raise KernelError("svd_filter needs a nonzero matrix")
    uu, s, _ = np.linalg.svd(f, full_matrices=False)
    if floor is None:
        floor = s[0] * max(f.shape) * np.finfo(float).eps
    cut = max(zeta * s[0], floor)
    j = max(int(np.count_nonzero(s >= cut)), 1)
    return uu[:, :j]


def block_arnoldi(apply_b, apply_c, f, r, zeta, max_cols=None):
    """Orthonormal basis of the generalized Krylov space built from ``f``.

    Blocks follow ``M_{k+1} = [B M_k, C M_k]`` with an SVD filter after each
    step; ``r`` is the number of expansion steps. ``apply_b``/``apply_c`` may
    be matrices or callables acting on blocks of columns.
    """
    ab = apply_b if callable(apply_b) else (lambda x, m=apply_b: m @ x)
    ac = apply_c if callable(apply_c) else (lambda x, m=apply_c: m @ x)
    w = svd_filter(f, zeta)
    q = w
    n = q.shape[0]
    limit = n if max_cols is None else min(n, max_cols)
    for _ in range(r):
        if q.shape[1] >= limit:
            break
        g = np.hstack([ab(w), ac(w)])
        for _ in range(2):
            g = g - q @ (q.conj().T @ g)
        # directions already in span(q) come back as rounding noise
        scale = max(np.linalg.norm(ab(w)), np.linalg.norm(ac(w)), 1e-300)
        if np.linalg.norm(g) <= 1e-12 * scale:
            break
        w = svd_filter(g, zeta, floor=1e-12 * scale)
        q = np.hstack([q, w])
    if q.shape[1] > limit:
        q = q[:, :limit]
    # one extra pass keeps the invariant tight after many blocks
    qq, rr = np.linalg.qr(q)
    sign = np.sign(np.diag(rr).real)
    sign[sign == 0] = 1
    return qq * sign


@dataclass
class GmresResult:
    x: np.ndarray
    residual: float
    steps: int
    breakdown: bool = False


def gmres(apply, rhs, precond=None, max_steps=10, tol=1e-12):
    """Right-preconditioned GMRES without restarts, started from zero.

    ``apply``/``precond`` are callables (or matrices). Returns a
    :class:`GmresResult` whose ``residual`` is the relative residual
    ``||b - A x|| / ||b||``.
    """
    op = apply if callable(apply) else (lambda x, m=apply: m @ x)
    if precond is None:
        pc = lambda x: x  # noqa: E731
    else:
        pc = precond if callable(precond) else (lambda x, m=precond: m @ x)
    b = np.asarray(rhs).reshape(-1)
    beta = np.linalg.norm(b)
    if beta == 0:
        return GmresResult(np.zeros_like(b), 0.0, 0)
    n = b.shape[0]
    v = np.zeros((n, max_steps + 1), dtype=complex)
    z = np.zeros((n, max_steps), dtype=complex)
    h = np.zeros((max_steps + 1, max_steps), dtype=complex)
    v[:, 0] = b / beta
    y = np.zeros(0)
    res = 1.0
    breakdown = False
    k = 0
    for k in range(1, max_steps + 1):
        j = k - 1
        z[:, j] = pc(v[:, j])
        w = op(z[:, j]).astype(complex)
        for _ in range(2):
            c = v[:, :k].conj().T @ w
            w = w - v[:, :k] @ c
            h[:k, j] += c
        h[k, j] = np.linalg.norm(w)
        e1 = np.zeros(k + 1, dtype=complex)
        e1[0] = beta
        y, *_ = np.linalg.lstsq(h[:k + 1, :k], e1, rcond=None)
        res = np.linalg.norm(e1 - h[:k + 1, :k] @ y) / beta
        if h[k, j].real <= 1e-14 * np.linalg.norm(h[:k + 1, j]):
            breakdown = True
            break
        v[:, k] = w / h[k, j]
        if res <= tol:
            break
    x = z[:, :k] @ y
    if np.isrealobj(b) and not np.any(x.imag):
        x = x.real
    return GmresResult(x, float(res), k, breakdown)


def lu_solver(m):
    """Factor once, return a callable solving ``m x = b``."""
    lu = sla.lu_factor(m, check_finite=False)
    return lambda b: sla.lu_solve(lu, b, check_finite=False)


def cond_estimate(m):
    """Cheap 1-norm condition estimate from an LU factorization."""
    m = np.asarray(m)
    if m.size == 0:
        return 1.0
    with warnings.catch_warnings():
        # exact singularity is reported as inf below
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(m, check_finite=False)
    if np.any(np.diag(lu) == 0):
        return np.inf
    anorm = np.linalg.norm(m, 1)
    gecon, = sla.get_lapack_funcs(("gecon",), (lu,))
    rcond, info = gecon(lu, anorm, norm="1")
    if rcond == 0:
        return np.inf
    return 1.0 / rcond
