"""Subspace iteration with block Arnoldi expansion for smallest-``|eta|`` eigenvalues.

Each iteration grows the three bases into generalized Krylov spaces of
``A_j^{-1} B_j`` and ``A_j^{-1} C_j``, solves the projected problem, polishes
the Ritz pairs with the smallest ``|psi|`` by TRQI and locks the converged
ones. The next bases are spanned by components of the surviving Ritz vectors.
"""
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .core import (COND_LIMIT, EigenPair, EigenTriple, MepError, NotAnEigenvalueError,
                   SingularDeltaError, direct_spectrum, equation_residuals,
                   left_eigenvector, normalize, project, selection_ratio)
from .kernels import block_arnoldi, cond_estimate, rgs_expand
from .trqi import trqi

RESTART_TOL = 1e-10


class SiConfigError(MepError):
    pass


@dataclass
class SiConfig:
    ell: int = 6
    r: int = 0
    zeta: float = 1e-5
    max_product_dim: int = 1000
    m: int = 100
    pre_trqi_steps: int = 1
    post_trqi_steps: int = 3
    delta: float = 1e-2
    eps: float = 1e-8
    xi1: float = 1e-1
    xi2: float = 1e-4
    max_iters: int = 30
    want: int = 10

    def __post_init__(self):
        if not self.eps < self.delta:
            raise ValueError("eps must be smaller than delta")
        if self.ell < 1 or self.ell > self.m:
            raise ValueError("need 1 <= ell <= m")
        if self.max_product_dim < self.ell ** 3:
            raise ValueError("max_product_dim must be at least ell**3")
        if not self.xi2 <= self.xi1 < 1:
            raise ValueError("need xi2 <= xi1 < 1")
        if min(self.r, self.pre_trqi_steps, self.post_trqi_steps, self.want) < 0:
            raise ValueError("step counts and want must be nonnegative")


@dataclass
class SiStats:
    iterations: int = 0
    trqi_runs: int = 0
    rejected: int = 0
    padded: int = 0
    search_dims: list = field(default_factory=list)
    wall_time: float = 0.0


@dataclass
class SiResult:
    pairs: list
    stats: SiStats


def shrink(bases, max_product_dim):
    """Drop trailing columns of the widest basis until the product fits."""
    bases = list(bases)
    while np.prod([b.shape[1] for b in bases]) > max_product_dim:
        j = max(range(3), key=lambda i: (bases[i].shape[1], -i))
        if bases[j].shape[1] == 1:
            raise SiConfigError("cannot shrink the search space below one column")
        bases[j] = bases[j][:, :-1]
    return bases


def ritz_order(values):
    """Ascending ``|psi|``; ties broken by ``|sigma|^2 + |tau|^2``."""
    v = np.asarray(values)
    return np.lexsort((np.abs(v[:, 0]) ** 2 + np.abs(v[:, 1]) ** 2, np.abs(v[:, 2])))


def _total_residual(problem, value, x):
    return float(np.sqrt(np.sum(equation_residuals(problem, value, x) ** 2)))


def _real_if_close(problem, value, x):
    if not problem.is_real:
        return value, x
    if all(abs(np.imag(t)) <= 1e-12 * max(1.0, abs(t)) for t in value):
        value = EigenTriple(*(complex(np.real(t)) for t in value))
        if all(np.max(np.abs(np.imag(xi))) <= 1e-12 for xi in x):
            x = tuple(np.real(xi) for xi in x)
    return value, x


class _Si:
    def __init__(self, problem, cfg, seed):
        self.p = problem
        self.cfg = cfg
        self.rng = np.random.default_rng(seed)
        self.real = problem.is_real
        self.stats = SiStats()
        self.locked = []
        self.solvers = []
        for i in range(3):
            a = problem.A[i]
            if cond_estimate(a) > COND_LIMIT:
                raise SingularDeltaError(f"A_{i + 1} is singular; shift the problem first")
            self.solvers.append(sla.lu_factor(a, check_finite=False))
        self.bases = [self._random(n, min(cfg.ell, n)) for n in problem.sizes]

    def _random(self, n, k):
        m = self.rng.standard_normal((n, k))
        if not self.real:
            m = m + 1j * self.rng.standard_normal((n, k))
        return np.linalg.qr(m)[0]

    def _inv(self, i, m):
        return sla.lu_solve(self.solvers[i], m, check_finite=False)

    def search_space(self):
        q = []
        for i, u in enumerate(self.bases):
            _, b, c, d = self.p.matrices(i)
            f = np.hstack([self._inv(i, b @ u), self._inv(i, c @ u), self._inv(i, d @ u)])
            q.append(block_arnoldi(lambda x, i=i, b=b: self._inv(i, b @ x),
                                   lambda x, i=i, c=c: self._inv(i, c @ x),
                                   f, self.cfg.r, self.cfg.zeta))
        full = tuple(x.shape[1] for x in q)
        q = shrink(q, self.cfg.max_product_dim)
        self.stats.search_dims.append((full, tuple(x.shape[1] for x in q)))
        return q

    def accept(self, x):
        cfg = self.cfg
        self.stats.trqi_runs += 1
        out = trqi(self.p, x, max_steps=cfg.post_trqi_steps, tol=cfg.eps)
        if not out.converged:
            return None
        value, xr = _real_if_close(self.p, out.pair.value, out.pair.x)
        if selection_ratio(xr, self.locked, self.p) >= cfg.xi2:
            return None
        v = np.asarray(value)
        if any(np.max(np.abs(v - np.asarray(q.value))) <= 10 * cfg.eps for q in self.locked):
            return None
        try:
            y = left_eigenvector(self.p, value)
        except NotAnEigenvalueError:
            return None
        return EigenPair(value, xr, y, _total_residual(self.p, value, xr),
                         meta={"iteration": self.stats.iterations})

    def restart(self, survivors):
        """Bases spanned by the components of the first ``ell`` survivors.

        Dependent components are skipped in favour of later survivors; any
        remaining gap is filled with random orthogonal directions.
        """
        ell = self.cfg.ell
        new = []
        for j, n in enumerate(self.p.sizes):
            target = min(ell, n)
            basis = None
            for idx, x in enumerate(survivors):
                if basis is not None and basis.shape[1] >= target:
                    break
                v = np.asarray(x[j])
                if basis is None:
                    basis = (v / np.linalg.norm(v)).reshape(-1, 1)
                    continue
                grown, ok = rgs_expand(basis, v, tol=RESTART_TOL)
                # the first ell survivors must stay exactly representable
                if ok or idx < ell:
                    basis = grown
            if basis is None:
                basis = self._random(n, 1)
            while basis.shape[1] < target:
                v = self.rng.standard_normal(n)
                if not self.real:
                    v = v + 1j * self.rng.standard_normal(n)
                basis, _ = rgs_expand(basis, v)
                self.stats.padded += 1
            new.append(basis)
        self.bases = new

    def run(self):
        cfg = self.cfg
        t0 = time.perf_counter()
        while len(self.locked) < cfg.want and self.stats.iterations < cfg.max_iters:
            self.stats.iterations += 1
            q = self.search_space()
            spec = direct_spectrum(project(self.p, q), strict=False, allow_singular=True)
            order = ritz_order(spec.values)[:cfg.m]
            survivors = []
            for k in order:
                x = normalize(tuple(qj @ s for qj, s in zip(q, spec.vector(k))))
                value = EigenTriple(*spec.values[k])
                if cfg.pre_trqi_steps:
                    self.stats.trqi_runs += 1
                    out = trqi(self.p, x, max_steps=cfg.pre_trqi_steps, tol=cfg.eps)
                    x, value = out.pair.x, out.pair.value
                if selection_ratio(x, self.locked, self.p) >= cfg.xi1:
                    continue
                if len(self.locked) < cfg.want and _total_residual(self.p, value, x) <= cfg.delta:
                    pair = self.accept(x)
                    if pair is not None:
                        self.locked.append(pair)
                        continue
                    self.stats.rejected += 1
                survivors.append(x)
            if len(self.locked) >= cfg.want:
                break
            self.restart(survivors)
        self.stats.wall_time = time.perf_counter() - t0
        return SiResult(self.locked, self.stats)


def si_solve(problem, cfg=None, seed=0):
    """Subspace iteration for the eigenvalues with smallest ``|eta|``.

    ``A_j`` must be invertible; apply a shift substitution first if needed.
    """
    cfg = cfg or SiConfig()
    return _Si(problem, cfg, seed).run()
