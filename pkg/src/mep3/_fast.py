"""Hot inner loops, each with a numba kernel and a numpy reference path.

The dispatchers at the bottom choose the numba kernel when
``mep3._accel.USE_NUMBA`` is set. Both paths must agree to rounding; the
test-suite runs them against each other.
"""
import numpy as np

from ._accel import USE_NUMBA, njit


# -- operator determinant assembly -------------------------------------------

def _det3_kron_numpy(rows):
    """Sum over permutations of signed triple Kronecker products.

    ``rows[i]`` is the triple of matrices in row ``i`` of the 3x3
    operator determinant; row ``i`` supplies the ``i``-th Kronecker factor.
    """
    (a1, b1, c1), (a2, b2, c2), (a3, b3, c3) = rows
    terms = (
        (+1, a1, b2, c3), (+1, b1, c2, a3), (+1, c1, a2, b3),
        (-1, a1, c2, b3), (-1, b1, a2, c3), (-1, c1, b2, a3),
    )
    out = None
    for sign, x, y, z in terms:
        t = np.kron(x, np.kron(y, z))
        if out is None:
            out = sign * t
        else:
            out += sign * t
    return out


@njit(cache=True)
def _det3_kron_numba(r1, r2, r3, out):
    n1 = r1.shape[1]
    n2 = r2.shape[1]
    n3 = r3.shape[1]
    for i1 in range(n1):
        for j1 in range(n1):
            a1 = r1[0, i1, j1]
            b1 = r1[1, i1, j1]
            c1 = r1[2, i1, j1]
            for i2 in range(n2):
                for j2 in range(n2):
                    a2 = r2[0, i2, j2]
                    b2 = r2[1, i2, j2]
                    c2 = r2[2, i2, j2]
                    # 2x2 minors of the first two rows
                    m_ab = a1 * b2 - b1 * a2
                    m_ac = a1 * c2 - c1 * a2
                    m_bc = b1 * c2 - c1 * b2
                    row = (i1 * n2 + i2) * n3
                    col = (j1 * n2 + j2) * n3
                    for i3 in range(n3):
                        for j3 in range(n3):
                            out[row + i3, col + j3] = (
                                m_bc * r3[0, i3, j3]
                                - m_ac * r3[1, i3, j3]
                                + m_ab * r3[2, i3, j3]
                            )
    return out


def det3_kron(rows):
    """Expand a 3x3 operator determinant into an explicit matrix."""
    if not USE_NUMBA:
        return _det3_kron_numpy(rows)
    stacks = [np.ascontiguousarray(np.stack(r).astype(np.complex128)) for r in rows]
    n = stacks[0].shape[1] * stacks[1].shape[1] * stacks[2].shape[1]
    out = np.empty((n, n), dtype=np.complex128)
    _det3_kron_numba(stacks[0], stacks[1], stacks[2], out)
    if all(np.isrealobj(m) for r in rows for m in r):
        return out.real.copy()
    return out


# -- batched 3x3 linear systems ----------------------------------------------

def _cramer_numpy(c1, c2, c3):
    n1, n2, n3 = len(c1), len(c2), len(c3)
    i1, i2, i3 = np.meshgrid(np.arange(n1), np.arange(n2), np.arange(n3), indexing="ij")
    i1, i2, i3 = i1.ravel(), i2.ravel(), i3.ravel()
    mat = np.stack([c1[i1, 1:], c2[i2, 1:], c3[i3, 1:]], axis=1)
    rhs = np.stack([c1[i1, 0], c2[i2, 0], c3[i3, 0]], axis=1)
    det = np.linalg.det(mat)
    sol = np.linalg.solve(mat, rhs[..., None])[..., 0]
    return sol, det


@njit(cache=True)
def _cramer_numba(c1, c2, c3, sol, det):
    n1 = c1.shape[0]
    n2 = c2.shape[0]
    n3 = c3.shape[0]
    k = 0
    for i1 in range(n1):
        a1, b1, e1, f1 = c1[i1, 0], c1[i1, 1], c1[i1, 2], c1[i1, 3]
        for i2 in range(n2):
            a2, b2, e2, f2 = c2[i2, 0], c2[i2, 1], c2[i2, 2], c2[i2, 3]
            for i3 in range(n3):
                a3, b3, e3, f3 = c3[i3, 0], c3[i3, 1], c3[i3, 2], c3[i3, 3]
                d0 = b1 * (e2 * f3 - f2 * e3) - e1 * (b2 * f3 - f2 * b3) + f1 * (b2 * e3 - e2 * b3)
                d1 = a1 * (e2 * f3 - f2 * e3) - e1 * (a2 * f3 - f2 * a3) + f1 * (a2 * e3 - e2 * a3)
                d2 = b1 * (a2 * f3 - f2 * a3) - a1 * (b2 * f3 - f2 * b3) + f1 * (b2 * a3 - a2 * b3)
                d3 = b1 * (e2 * a3 - a2 * e3) - e1 * (b2 * a3 - a2 * b3) + a1 * (b2 * e3 - e2 * b3)
                det[k] = d0
                sol[k, 0] = d1 / d0
                sol[k, 1] = d2 / d0
                sol[k, 2] = d3 / d0
                k += 1


def cramer_grid(c1, c2, c3):
    """Solve ``a = lam*b + mu*c + eta*d`` for every row triple.

    ``c_i`` has rows ``(a, b, c, d)``. Returns the ``(n1*n2*n3, 3)``
    solutions in vec order (last index fastest) and the determinants.
    """
    c1, c2, c3 = (np.ascontiguousarray(c, dtype=np.float64) for c in (c1, c2, c3))
    if not USE_NUMBA:
        return _cramer_numpy(c1, c2, c3)
    n = len(c1) * len(c2) * len(c3)
    sol = np.empty((n, 3))
    det = np.empty(n)
    _cramer_numba(c1, c2, c3, sol, det)
    return sol, det
