"""Chebyshev collocation of separable boundary value problems, plus a
random test generator with a known spectrum."""
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import _fast
from .core import ThreeParamProblem


class DiscretizationError(ValueError):
    pass


@dataclass(frozen=True)
class ChebGrid:
    n: int
    a: float
    b: float
    points: np.ndarray
    D1: np.ndarray
    D2: np.ndarray


def cheb_grid(n, a=-1.0, b=1.0):
    """Chebyshev-Lobatto points on ``[a, b]`` (descending) and differentiation matrices."""
    if n < 2:
        raise DiscretizationError("need at least two collocation points")
    if not b > a:
        raise DiscretizationError(f"degenerate interval [{a}, {b}]")
    m = n - 1
    k = np.arange(n)
    x = np.cos(np.pi * k / m)
    c = np.ones(n)
    c[0] = c[-1] = 2.0
    c = c * (-1.0) ** k
    dx = x[:, None] - x[None, :]
    d = np.outer(c, 1.0 / c) / (dx + np.eye(n))
    # negative-sum trick for the diagonal
    d = d - np.diag(d.sum(axis=1))
    d1 = d * (2.0 / (b - a))
    t = a + (b - a) * (x + 1.0) / 2.0
    t[0], t[-1] = b, a
    return ChebGrid(n, float(a), float(b), t, d1, d1 @ d1)


class Dirichlet(NamedTuple):
    pass


class EigenRobin(NamedTuple):
    """``alpha*y' + (c0 + c1*lam + c2*mu + c3*eta)*y = 0`` at the endpoint."""
    alpha: float
    c0: float
    c1: float
    c2: float
    c3: float


def _eval(f, t):
    if callable(f):
        return np.broadcast_to(np.asarray(f(t), dtype=float), t.shape).copy()
    return np.full(t.shape, float(f))


def assemble_equation(grid, p, q, r, s1, s2, s3, bc_left, bc_right):
    """Collocate ``p y'' + q y' + r y = (lam s1 + mu s2 + eta s3) y``.

    ``bc_left`` applies at ``grid.a``, ``bc_right`` at ``grid.b``. Dirichlet
    endpoints are eliminated; :class:`EigenRobin` endpoints replace the
    collocation row. Returns ``(A, B, C, D, kept)`` with ``kept`` the grid
    indices of the remaining unknowns.
    """
    t = grid.points
    n = grid.n
    a = _eval(p, t)[:, None] * grid.D2 + _eval(q, t)[:, None] * grid.D1 + np.diag(_eval(r, t))
    mats = [a] + [np.diag(_eval(s, t)) for s in (s1, s2, s3)]
    # points descend: index 0 is the right end b, index n-1 the left end a
    drop = []
    for bc, row in ((bc_right, 0), (bc_left, n - 1)):
        if isinstance(bc, Dirichlet):
            drop.append(row)
        elif isinstance(bc, EigenRobin):
            unit = np.zeros(n)
            unit[row] = 1.0
            mats[0][row] = bc.alpha * grid.D1[row] + bc.c0 * unit
            mats[1][row] = -bc.c1 * unit
            mats[2][row] = -bc.c2 * unit
            mats[3][row] = -bc.c3 * unit
        else:
            raise DiscretizationError(f"unknown boundary condition {bc!r}")
    kept = np.array([i for i in range(n) if i not in drop])
    if len(kept) < 2:
        raise DiscretizationError("fewer than two unknowns left after eliminating boundaries")
    ix = np.ix_(kept, kept)
    return tuple(m[ix] for m in mats) + (kept,)


def _robin_from_ode(q, r, t):
    """Boundedness condition at a regular singular endpoint (``p(t) = 0``):
    the ODE itself evaluated there, with the spectral terms moved left."""
    return EigenRobin(float(_eval(q, np.array([t]))[0]), float(_eval(r, np.array([t]))[0]),
                      1.0, float(t), float(t) ** 2)


@dataclass
class BvpProblem:
    problem: ThreeParamProblem
    grids: tuple
    kept: tuple
    app: str
    params: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    oracle: Optional[np.ndarray] = None

    def eigenfrequency(self, eta):
        return eigenfrequency(self, eta)

    def indices(self, x):
        return index_triple(self, x)


def _assemble(grids, coeffs, bcs, app, params, constants):
    blocks = [assemble_equation(g, *c, *bc) for g, c, bc in zip(grids, coeffs, bcs)]
    prob = ThreeParamProblem(A=tuple(b[0] for b in blocks), B=tuple(b[1] for b in blocks),
                             C=tuple(b[2] for b in blocks), D=tuple(b[3] for b in blocks))
    return BvpProblem(prob, tuple(grids), tuple(b[4] for b in blocks), app, params, constants)


def ellipsoidal_constants(x0, y0, z0, rho, sigma, tau):
    a2 = z0 ** 2 - x0 ** 2
    b2 = z0 ** 2 - y0 ** 2
    c = a2 / b2
    return {
        "a": np.sqrt(a2), "b": np.sqrt(b2), "c": c, "t_max": z0 ** 2 / b2,
        "lambda0": 0.25 * ((rho + tau) ** 2 + (rho + sigma) ** 2 * c),
        "mu0": 0.25 * (rho + sigma + tau) * (rho + sigma + tau + 1),
        "k0": (2 * rho + 1) * c,
        "k1": (1 + rho) * (1 + c) + tau + sigma * c,
        "k2": 2 * (rho + sigma + tau) + 3,
    }


def gen_ellipsoidal(x0, y0, z0, rho=0, sigma=0, tau=0, n=60):
    """Ellipsoidal wave equations for the semi-axes ``x0 < y0 < z0``."""
    if not (z0 > y0 > x0 > 0):
        raise DiscretizationError("need z0 > y0 > x0 > 0")
    if any(v not in (0, 1) for v in (rho, sigma, tau)):
        raise DiscretizationError("rho, sigma, tau must be 0 or 1")
    k = ellipsoidal_constants(x0, y0, z0, rho, sigma, tau)
    c, lam0, mu0 = k["c"], k["lambda0"], k["mu0"]
    p = lambda t: t * (t - 1) * (t - c)  # noqa: E731
    q = lambda t: 0.5 * (k["k2"] * t ** 2 - 2 * k["k1"] * t + k["k0"])  # noqa: E731
    r = lambda t: -lam0 + mu0 * t  # noqa: E731
    coeffs = (p, q, r, -1.0, lambda t: -t, lambda t: -t ** 2)
    grids = (cheb_grid(n, c, k["t_max"]), cheb_grid(n, 1.0, c), cheb_grid(n, 0.0, 1.0))
    rob = lambda t: _robin_from_ode(q, r, t)  # noqa: E731
    bcs = (
        (rob(c), Dirichlet()),
        (rob(1.0), rob(c)),
        (rob(0.0), rob(1.0)),
    )
    params = {"x0": x0, "y0": y0, "z0": z0, "rho": rho, "sigma": sigma, "tau": tau, "n": n}
    return _assemble(grids, [coeffs] * 3, bcs, "ellipsoidal", params, k)


def baer_constants(b, c, rho, sigma):
    return {
        "k1": 2 * (1 + rho + sigma),
        "k0": (1 + 2 * sigma) * b + (1 + 2 * rho) * c,
        "lambda0": -0.25 * (rho + sigma + 2 * rho * sigma),
    }


def gen_baer(gamma, beta, c, b, rho=0, sigma=0, n=60):
    """Baer wave equations on ``gamma < c < b < beta``."""
    if not (gamma < c < b < beta):
        raise DiscretizationError("need gamma < c < b < beta")
    if any(v not in (0, 1) for v in (rho, sigma)):
        raise DiscretizationError("rho, sigma must be 0 or 1")
    k = baer_constants(b, c, rho, sigma)
    p = lambda t: (t - b) * (t - c)  # noqa: E731
    q = lambda t: 0.5 * (k["k1"] * t - k["k0"])  # noqa: E731
    r = -k["lambda0"]
    coeffs = (p, q, r, -1.0, lambda t: -t, lambda t: -t ** 2)
    grids = (cheb_grid(n, gamma, c), cheb_grid(n, c, b), cheb_grid(n, b, beta))
    rob = lambda t: _robin_from_ode(q, r, t)  # noqa: E731
    bcs = (
        (Dirichlet(), rob(c)),
        (rob(c), rob(b)),
        (rob(b), Dirichlet()),
    )
    params = {"gamma": gamma, "beta": beta, "c": c, "b": b, "rho": rho, "sigma": sigma, "n": n}
    return _assemble(grids, [coeffs] * 3, bcs, "baer", params, k)


def gen_four_point(n=50):
    """``y'' + (lam + 2 mu cos x + 2 eta cos 2x) y = 0`` with ``y(0)=y(1)=y(2)=y(3)=0``."""
    if n < 4:
        raise DiscretizationError("need n >= 4")
    coeffs = (1.0, 0.0, 0.0, -1.0, lambda t: -2 * np.cos(t), lambda t: -2 * np.cos(2 * t))
    grids = tuple(cheb_grid(n, float(i), float(i + 1)) for i in range(3))
    bcs = ((Dirichlet(), Dirichlet()),) * 3
    return _assemble(grids, [coeffs] * 3, bcs, "fourpoint", {"n": n}, {})


# -- random problems with known spectrum -------------------------------------

RANDOM_OFFSETS = (
    # (a, b, c, d) shifts added to uniform[0, 1] samples, per equation
    (-0.5, 2.0, 0.0, -1.0),
    (-0.5, 0.0, 2.0, 0.5),
    (-0.5, -1.0, 0.0, 2.0),
)


def _sparse_identity_plus(rng, n, density=0.04, weight=0.3):
    mask = rng.random((n, n)) < density
    return np.eye(n) + weight * np.where(mask, rng.random((n, n)), 0.0)


@dataclass
class RandomDiagOracle:
    values: np.ndarray        # (n^3, 3), vec order
    coefficients: tuple       # per equation, (n, 4) rows (a, b, c, d)
    U: tuple
    V: tuple

    @property
    def n(self):
        return self.coefficients[0].shape[0]

    def triple(self, flat):
        n = self.n
        return flat // (n * n), (flat // n) % n, flat % n

    def right_vectors(self, flat):
        idx = self.triple(flat)
        return tuple(np.linalg.solve(self.V[i], np.eye(self.n)[:, idx[i]]) for i in range(3))

    def left_vectors(self, flat):
        idx = self.triple(flat)
        return tuple(np.linalg.solve(self.U[i].conj().T, np.eye(self.n)[:, idx[i]])
                     for i in range(3))


def gen_random_diag(n, seed=0):
    """``A_i = U_i diag(a_i) V_i`` etc. with sparse near-identity ``U_i, V_i``.

    The eigenvalues are the solutions of the ``n^3`` 3x3 systems built from
    the diagonal entries. Returns ``(problem, oracle)``.
    """
    if n < 1:
        raise DiscretizationError("n must be positive")
    rng = np.random.default_rng(seed)
    us = tuple(_sparse_identity_plus(rng, n) for _ in range(3))
    vs = tuple(_sparse_identity_plus(rng, n) for _ in range(3))
    coefs = []
    for offsets in RANDOM_OFFSETS:
        coefs.append(np.column_stack([rng.random(n) + o for o in offsets]))
    mats = {k: [] for k in "ABCD"}
    for i in range(3):
        for j, name in enumerate("ABCD"):
            mats[name].append(us[i] @ np.diag(coefs[i][:, j]) @ vs[i])
    problem = ThreeParamProblem(**{k: tuple(v) for k, v in mats.items()})
    values, det = _fast.cramer_grid(*coefs)
    if np.min(np.abs(det)) < 1e-12:
        raise DiscretizationError("singular 3x3 system; choose another seed")
    return problem, RandomDiagOracle(values, tuple(coefs), us, vs)


# -- post-processing ---------------------------------------------------------

class IndexTriple(NamedTuple):
    j1: int
    j2: int
    j3: int


def real_profile(values, tol=1e-6):
    """Rotate a complex vector by a global phase so it is (numerically) real."""
    v = np.asarray(values)
    if np.isrealobj(v):
        return v
    k = int(np.argmax(np.abs(v)))
    v = v * np.exp(-1j * np.angle(v[k]))
    if np.linalg.norm(v.imag) > tol * np.linalg.norm(v):
        raise DiscretizationError("eigenvector component is not real up to a phase")
    return v.real


def count_zeros(values, rel_tol=1e-8):
    """Sign changes between consecutive values, skipping negligible entries."""
    v = real_profile(values)
    big = np.abs(v) > rel_tol * np.max(np.abs(v)) if v.size else v
    s = np.sign(v[big])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def index_triple(bvp, x):
    return IndexTriple(*(count_zeros(xi) for xi in x))


def eigenfrequency(bvp, eta):
    eta = complex(eta)
    if abs(eta.imag) > 1e-8 * max(1.0, abs(eta)):
        raise DiscretizationError("eigenfrequency needs a real eta")
    eta = eta.real
    if eta < 0:
        raise DiscretizationError("eigenfrequency needs eta >= 0")
    if bvp.app == "ellipsoidal":
        return 2.0 * np.sqrt(eta) / bvp.constants["b"]
    if bvp.app == "baer":
        return float(np.sqrt(eta))
    raise DiscretizationError(f"no eigenfrequency map for application '{bvp.app}'")
