"""Three-parameter eigenvalue problems ``A_i x_i = (lam B_i + mu C_i + eta D_i) x_i``.

Holds the problem type, the operator determinants, the dense reference
solver and the small utilities (Rayleigh triples, residuals, selection
ratios, projections, shifts) that the iterative solvers are built from.
"""
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg as sla
from scipy.spatial import cKDTree

from . import _fast
from .kernels import cond_estimate

DELTA_CAP = 20_000
COND_LIMIT = 1e12
RANK1_DEFECT_TOL = 1e-6
COLLISION_TOL = 1e-10


class MepError(RuntimeError):
    """Base class for solver failures."""


class SizeCapError(MepError):
    pass


class SingularDeltaError(MepError):
    pass


class SingularQuotientError(MepError):
    pass


class CollisionError(MepError):
    pass


class NotAnEigenvalueError(MepError):
    pass


class InvalidLockedPairError(MepError):
    pass


# Column patterns of the four operator determinants: index 0..3 into (A, B, C, D).
DELTA_COLUMNS = {
    0: (1, 2, 3),
    1: (0, 2, 3),
    2: (1, 0, 3),
    3: (1, 2, 0),
}


@dataclass(frozen=True)
class ThreeParamProblem:
    A: tuple
    B: tuple
    C: tuple
    D: tuple

    def __post_init__(self):
        for name in "ABCD":
            mats = getattr(self, name)
            if len(mats) != 3:
                raise ValueError(f"{name} must hold three matrices")
            object.__setattr__(self, name, tuple(np.atleast_2d(np.asarray(m)) for m in mats))
        for i in range(3):
            n = self.A[i].shape[0]
            for name in "ABCD":
                if getattr(self, name)[i].shape != (n, n):
                    raise ValueError(
                        f"{name}{i + 1} has shape {getattr(self, name)[i].shape}, expected {(n, n)}")

    @property
    def sizes(self):
        return tuple(a.shape[0] for a in self.A)

    @property
    def is_real(self):
        return all(np.isrealobj(m) for name in "ABCD" for m in getattr(self, name))

    def matrices(self, i):
        """``(A_i, B_i, C_i, D_i)`` for 0-based equation index ``i``."""
        return self.A[i], self.B[i], self.C[i], self.D[i]

    def pencil(self, i, value):
        lam, mu, eta = value
        a, b, c, d = self.matrices(i)
        return a - lam * b - mu * c - eta * d

    @cached_property
    def _scale(self):
        return max(np.linalg.norm(m) for name in "ABCD" for m in getattr(self, name))

    def scale(self):
        """Largest Frobenius norm among the twelve matrices."""
        return self._scale


class EigenTriple(NamedTuple):
    lam: complex
    mu: complex
    eta: complex

    def as_array(self):
        return np.array([self.lam, self.mu, self.eta])


@dataclass
class EigenPair:
    value: EigenTriple
    x: tuple
    y: Optional[tuple] = None
    residual_norm: float = np.nan
    rank1_defect: float = 0.0
    meta: dict = field(default_factory=dict)


@dataclass
class DeltaSet:
    D0: np.ndarray
    D1: np.ndarray
    D2: np.ndarray
    D3: np.ndarray

    def __getitem__(self, i):
        return (self.D0, self.D1, self.D2, self.D3)[i]


@dataclass(frozen=True)
class Point:
    lam: complex
    mu: complex
    eta: complex

    def distance(self, values):
        v = np.asarray(values)
        t = np.array([self.lam, self.mu, self.eta])
        return np.sum(np.abs(v - t) ** 2, axis=-1)


@dataclass(frozen=True)
class EtaPlane:
    eta: complex = 0.0

    def distance(self, values):
        v = np.asarray(values)
        return np.abs(v[..., 2] - self.eta)


# -- operator determinants ---------------------------------------------------

def _check_cap(problem, cap):
    n = int(np.prod(problem.sizes))
    if n > cap:
        raise SizeCapError(f"n1*n2*n3 = {n} exceeds the explicit-determinant cap {cap}")
    return n


def build_delta(problem, which):
    cols = DELTA_COLUMNS[which]
    rows = [tuple(problem.matrices(i)[c] for c in cols) for i in range(3)]
    return _fast.det3_kron(rows)


def build_deltas(problem, cap=DELTA_CAP):
    _check_cap(problem, cap)
    return DeltaSet(*(build_delta(problem, w) for w in range(4)))


def _form_entries(y, problem, x):
    """``y_i^H M x_i`` for each equation ``i`` and ``M`` in ``(A, B, C, D)``."""
    out = np.empty((3, 4), dtype=complex)
    for i in range(3):
        yi = np.asarray(y[i]).reshape(-1)
        xi = np.asarray(x[i]).reshape(-1)
        if yi.shape[0] != problem.sizes[i] or xi.shape[0] != problem.sizes[i]:
            raise ValueError(f"component {i + 1} has the wrong length")
        for k, m in enumerate(problem.matrices(i)):
            out[i, k] = np.vdot(yi, m @ xi)
    return out


def _det3(m):
    return (m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
            - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
            + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))


def decomposable_form(y, problem, which, x):
    """``(y1 (x) y2 (x) y3)^H Delta_which (x1 (x) x2 (x) x3)`` without Kronecker products."""
    e = _form_entries(y, problem, x)
    return complex(_det3(e[:, list(DELTA_COLUMNS[which])]))


def decomposable_forms(y, problem, x):
    """All four decomposable forms at once."""
    e = _form_entries(y, problem, x)
    return np.array([_det3(e[:, list(DELTA_COLUMNS[w])]) for w in range(4)])


def rayleigh_triple(problem, x, tol=1e-14):
    """Tensor Rayleigh quotient of the decomposable vector ``x1 (x) x2 (x) x3``."""
    f = decomposable_forms(x, problem, x)
    # Delta_0 only involves B, C, D; A may be much larger (collocation)
    bcd = [max(np.linalg.norm(m[i]) for m in (problem.B, problem.C, problem.D)) for i in range(3)]
    scale = np.prod([np.linalg.norm(xi) ** 2 * max(s, 1e-300) for xi, s in zip(x, bcd)])
    if abs(f[0]) <= tol * scale:
        raise SingularQuotientError("Delta_0 form vanishes at this vector")
    return EigenTriple(*(complex(v) for v in f[1:] / f[0]))


def equation_residuals(problem, value, x):
    return np.array([np.linalg.norm(problem.pencil(i, value) @ np.asarray(x[i]).reshape(-1))
                     for i in range(3)])


def residual(problem, pair):
    """Per-equation residual norms and their Euclidean combination."""
    r = equation_residuals(problem, pair.value, pair.x)
    return r, float(np.sqrt(np.sum(r ** 2)))


def selection_ratio(u, locked, problem):
    """Largest ``|y_q^H D0 u| / |y_q^H D0 x_q|`` over locked pairs (0 if none)."""
    best = 0.0
    for q in locked:
        if q.y is None:
            raise InvalidLockedPairError("locked pair has no left eigenvector")
        key, den = q.meta.get("_sel_den", (None, None))
        if key != id(problem):
            den = abs(decomposable_form(q.y, problem, 0, q.x))
            q.meta["_sel_den"] = (id(problem), den)
        if den == 0:
            raise InvalidLockedPairError("locked pair violates y^H D0 x != 0")
        num = abs(decomposable_form(q.y, problem, 0, u))
        best = max(best, num / den)
    return best


# -- dense reference solver --------------------------------------------------

def rank1_factors(z, dims):
    """Best rank-1 factors of ``z`` viewed as an ``n1 x n2 x n3`` tensor.

    ``z`` may be a single vector or an ``(N, n1*n2*n3)`` batch. Returns unit
    factors ``(x1, x2, x3)`` (batched) and the relative rank-1 defect.
    """
    n1, n2, n3 = dims
    zz = np.atleast_2d(z)
    batch = zz.shape[0]
    t = zz.reshape(batch, n1, n2, n3)
    u1 = np.linalg.svd(t.reshape(batch, n1, n2 * n3), full_matrices=False)[0][:, :, 0]
    u3 = np.linalg.svd(np.moveaxis(t, 3, 1).reshape(batch, n3, n1 * n2), full_matrices=False)[0][:, :, 0]
    x2 = np.einsum("bi,bijk,bk->bj", u1.conj(), t, u3.conj())
    nrm = np.linalg.norm(x2, axis=1)
    nrm[nrm == 0] = 1.0
    x2 = x2 / nrm[:, None]
    coef = np.einsum("bi,bj,bk,bijk->b", u1.conj(), x2.conj(), u3.conj(), t)
    approx = coef[:, None, None, None] * np.einsum("bi,bj,bk->bijk", u1, x2, u3)
    defect = np.linalg.norm((t - approx).reshape(batch, -1), axis=1) / np.maximum(
        np.linalg.norm(zz, axis=1), 1e-300)
    factors = (u1, x2, u3)
    factors = tuple(_fix_phase(f) for f in factors)
    if np.ndim(z) == 1:
        return tuple(f[0] for f in factors), float(defect[0])
    return factors, defect


def _fix_phase(f):
    """Rotate each row so its largest entry is real positive."""
    idx = np.argmax(np.abs(f), axis=1)
    piv = f[np.arange(f.shape[0]), idx]
    ph = np.where(np.abs(piv) > 0, piv / np.abs(piv), 1.0)
    out = f / ph[:, None]
    if np.isrealobj(f):
        return out.real
    return out


def _collisions(vals, tol):
    pts = np.column_stack([vals.real, vals.imag])
    if len(pts) < 2:
        return False
    scale = max(1.0, float(np.max(np.abs(vals))))
    return len(cKDTree(pts).query_pairs(tol * scale)) > 0


def _matmul(m, v):
    # mixed real/complex or Fortran-ordered operands fall off the fast BLAS path
    if np.isrealobj(m) and np.iscomplexobj(v):
        return (m @ np.ascontiguousarray(v.real)) + 1j * (m @ np.ascontiguousarray(v.imag))
    return m @ np.ascontiguousarray(v)


def _quadratic_forms(m, vecs):
    """``v_k^H M v_k`` for every column ``v_k``."""
    return np.einsum("ij,ij->j", vecs.conj(), _matmul(m, vecs))


def _mixing_weights(rng):
    w = rng.standard_normal(3)
    return w / np.linalg.norm(w)


@dataclass
class Spectrum:
    """Raw output of the dense solver: values and batched rank-1 factors."""
    values: np.ndarray
    factors: tuple
    defect: np.ndarray
    collided: bool

    def __len__(self):
        return self.values.shape[0]

    def vector(self, k):
        return tuple(f[k] for f in self.factors)


def direct_spectrum(problem, cap=DELTA_CAP, seed=0, strict=True, cond_limit=COND_LIMIT,
                    allow_singular=False):
    """Eigenvalues and rank-1 eigenvector factors from the explicit ``Delta`` matrices.

    See :func:`solve_direct` for the meaning of the flags.
    """
    dims = problem.sizes
    deltas = build_deltas(problem, cap)
    rng = np.random.default_rng(seed)
    denom = deltas.D0
    cond = cond_estimate(denom)
    singular = cond > cond_limit
    if singular and allow_singular:
        w = rng.standard_normal(4)
        denom = sum(w[k] * deltas[k] for k in range(4))
        cond = cond_estimate(denom)
        if cond > cond_limit:
            raise SingularDeltaError("singular operator determinant pencil")
    elif singular and (strict or not np.isfinite(cond)):
        raise SingularDeltaError(f"Delta_0 is singular or ill-conditioned (cond ~ {cond:.3g})")
    lu = sla.lu_factor(denom, check_finite=False)
    collided = False
    for _ in range(2):
        xi = _mixing_weights(rng)
        mix = xi[0] * deltas.D1 + xi[1] * deltas.D2 + xi[2] * deltas.D3
        if singular and allow_singular:
            mix = mix + rng.standard_normal() * deltas.D0
        vals, vecs = np.linalg.eig(sla.lu_solve(lu, mix, check_finite=False))
        den = _quadratic_forms(deltas.D0, vecs)
        if singular and allow_singular:
            # infinite eigenvalues: Delta_0 annihilates the vector; they may
            # coincide with each other, so only finite ones are checked
            ref = np.abs(_quadratic_forms(denom, vecs))
            finite = np.abs(den) > 1e-10 * ref
            vals, vecs, den = vals[finite], vecs[:, finite], den[finite]
        collided = _collisions(vals, COLLISION_TOL)
        if not collided:
            break
    if collided and strict:
        raise CollisionError("eigenvalues of the mixed Delta pencil collide after a redraw")
    trip = np.empty((vecs.shape[1], 3), dtype=complex)
    for k, d in enumerate((deltas.D1, deltas.D2, deltas.D3)):
        trip[:, k] = _quadratic_forms(d, vecs) / den
    factors, defect = rank1_factors(vecs.T, dims)
    return Spectrum(trip, factors, defect, collided)


def solve_direct(problem, cap=DELTA_CAP, seed=0, strict=True, cond_limit=COND_LIMIT,
                 allow_singular=False):
    """All ``n1*n2*n3`` eigenpairs from the explicit operator determinants.

    The commuting matrices ``D0^{-1} D_i`` are diagonalized through one random
    combination; each eigenvalue is read off by Rayleigh quotients of the
    ``Delta`` matrices and the eigenvector is split into rank-1 factors.

    With ``strict`` the solver raises on an ill-conditioned ``Delta_0`` or on
    a persistent eigenvalue collision; otherwise it carries on and reports
    collisions in ``pair.meta``. ``allow_singular`` replaces ``Delta_0`` by a
    random combination of all four determinants when ``Delta_0`` is singular
    and drops the resulting infinite eigenvalues.
    """
    spec = direct_spectrum(problem, cap, seed, strict, cond_limit, allow_singular)
    trip = spec.values
    if problem.is_real and np.all(np.abs(trip.imag) <= 1e-13 * np.maximum(1, np.abs(trip))):
        trip = trip.real
    pairs = []
    for k in range(len(spec)):
        xk = spec.vector(k)
        if np.isrealobj(trip) and all(np.max(np.abs(f.imag)) <= 1e-12 for f in xk):
            xk = tuple(f.real for f in xk)
        value = EigenTriple(*(complex(t) for t in trip[k]))
        res = equation_residuals(problem, value, xk)
        pairs.append(EigenPair(value, xk, None, float(np.sqrt(np.sum(res ** 2))),
                               float(spec.defect[k]),
                               {"collision": spec.collided,
                                "simple": spec.defect[k] <= RANK1_DEFECT_TOL}))
    return pairs


def spectrum_array(pairs):
    return np.array([p.value.as_array() for p in pairs])


def match_spectra(computed, reference):
    """Greedy nearest-neighbour matching of eigenvalue triples.

    Returns ``(index_pairs, errors)`` where errors are max-norm distances.
    Raises :class:`CollisionError` if the greedy pass would reuse a reference.
    """
    a = np.asarray(computed, dtype=complex).reshape(-1, 3)
    b = np.asarray(reference, dtype=complex).reshape(-1, 3)
    dist = np.max(np.abs(a[:, None, :] - b[None, :, :]), axis=2)
    order = np.argsort(dist.min(axis=1), kind="stable")
    used = set()
    out = []
    errs = []
    for i in order:
        cand = np.argsort(dist[i], kind="stable")
        j = next((j for j in cand if j not in used), None)
        if j is None:
            raise CollisionError("more computed eigenvalues than reference eigenvalues")
        if j != cand[0]:
            # nearest reference already taken by another computed value
            if dist[i, cand[0]] < 0.5 * dist[i, j]:
                raise CollisionError(f"eigenvalue {i} collides with an already matched reference")
        used.add(j)
        out.append((int(i), int(j)))
        errs.append(float(dist[i, j]))
    return out, np.array(errs)


# -- projections and transformations -----------------------------------------

def project(problem, bases):
    """Compress every matrix to ``U_j^H M U_j``."""
    mats = {}
    for name in "ABCD":
        mats[name] = tuple(u.conj().T @ m @ u for u, m in zip(bases, getattr(problem, name)))
    return ThreeParamProblem(**mats)


def shift_substitute(problem, eta_tar, lambda_shift=0.0):
    """Problem with eigenvalues ``(lam + lambda_shift, mu, eta - eta_tar)``."""
    a = tuple(problem.A[i] + lambda_shift * problem.B[i] - eta_tar * problem.D[i] for i in range(3))
    return replace(problem, A=a)


def precondition_inverse_A(problem, cond_limit=COND_LIMIT):
    """Left-multiply equation ``j`` by ``A_j^{-1}``; the spectrum is unchanged."""
    out = {name: [] for name in "ABCD"}
    for i in range(3):
        a, b, c, d = problem.matrices(i)
        if cond_estimate(a) > cond_limit:
            raise SingularDeltaError(f"A_{i + 1} is singular or ill-conditioned")
        lu = sla.lu_factor(a, check_finite=False)
        out["A"].append(np.eye(a.shape[0], dtype=a.dtype))
        for name, m in zip("BCD", (b, c, d)):
            out[name].append(sla.lu_solve(lu, m, check_finite=False))
    return ThreeParamProblem(**{k: tuple(v) for k, v in out.items()})


def left_eigenvector(problem, value, rel_tol=1e-4):
    """Unit left null vectors ``y_j`` of the three pencils at ``value``."""
    ys = []
    for i in range(3):
        w = problem.pencil(i, value)
        u, s, _ = np.linalg.svd(w)
        ref = max(np.linalg.norm(problem.A[i], 2), np.linalg.norm(w, 2), 1e-300)
        if s[-1] > rel_tol * ref:
            raise NotAnEigenvalueError(
                f"pencil {i + 1} has smallest singular value {s[-1]:.3g}; not an eigenvalue")
        y = u[:, -1]
        if problem.is_real and np.allclose(np.asarray(value).imag, 0):
            y = _fix_phase(y[None, :])[0]
        ys.append(y)
    return tuple(ys)


def normalize(x):
    return tuple(np.asarray(xi) / np.linalg.norm(xi) for xi in x)


def make_pair(problem, value, x, with_left=False):
    x = normalize(x)
    value = EigenTriple(*value)
    r = equation_residuals(problem, value, x)
    y = left_eigenvector(problem, value) if with_left else None
    return EigenPair(value, x, y, float(np.sqrt(np.sum(r ** 2))))
