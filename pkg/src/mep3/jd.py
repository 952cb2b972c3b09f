"""Jacobi-Davidson method for three-parameter eigenvalue problems.

One eigenpair is extracted at a time from a small projected problem. Ritz
pairs that are close enough are polished by TRQI and locked together with
their left eigenvectors; the selection ratio keeps later Ritz pairs away from
locked eigenvalues. Otherwise each basis grows by the solution of a projected
correction equation.
"""
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import scipy.linalg as sla

from .core import (EigenPair, EigenTriple, EtaPlane, MepError, NotAnEigenvalueError, Point,
                   SingularDeltaError, SingularQuotientError, direct_spectrum,
                   equation_residuals, left_eigenvector, normalize, project, selection_ratio)
from .kernels import gmres, orthonormalize, rgs_expand
from .trqi import trqi

PIVOT_TOL = 1e-14


class SingularPencilError(MepError):
    pass


@dataclass(frozen=True)
class Exact:
    """Solve the correction equation exactly through one pencil solve."""


@dataclass(frozen=True)
class Gmres:
    steps: int = 10
    use_precond: bool = True


@dataclass
class JdConfig:
    ell: int = 5
    max_dim: int = 10
    delta: float = 1e-1
    eps: float = 1e-8
    xi1: float = 1e-1
    xi2: float = 1e-4
    trqi_steps: int = 4
    target: Union[Point, EtaPlane] = field(default_factory=EtaPlane)
    correction: Optional[Union[Exact, Gmres]] = None
    max_updates: int = 500
    want: int = 10

    def __post_init__(self):
        if not self.eps < self.delta:
            raise ValueError("eps must be smaller than delta")
        if not 1 <= self.ell <= self.max_dim:
            raise ValueError("need 1 <= ell <= max_dim")
        if not self.xi2 <= self.xi1 < 1:
            raise ValueError("need xi2 <= xi1 < 1")
        if self.trqi_steps < 0 or self.max_updates < 0 or self.want < 0:
            raise ValueError("trqi_steps, max_updates and want must be nonnegative")
        if self.correction is None:
            self.correction = Gmres() if isinstance(self.target, Point) else Exact()
        if (isinstance(self.correction, Gmres) and self.correction.use_precond
                and not isinstance(self.target, Point)):
            raise ValueError("the target preconditioner needs a Point target")


@dataclass
class JdStats:
    updates: int = 0
    iterations: int = 0
    restarts: int = 0
    trqi_runs: int = 0
    rejected: int = 0
    random_expansions: int = 0
    wall_time: float = 0.0


@dataclass
class JdResult:
    pairs: list
    stats: JdStats


# -- correction equations ----------------------------------------------------

def _factor(w):
    lu, piv = sla.lu_factor(w, check_finite=False)
    d = np.abs(np.diag(lu))
    if d.min() <= PIVOT_TOL * max(d.max(), 1e-300):
        return None
    return lu, piv


def correction_exact(problem, value, u):
    """Exact solutions ``v_j = -u_j + z_j / (u_j^H z_j)`` with ``z_j = W_j^{-1} u_j``.

    A singular pencil is retried once with ``eta`` moved by ``1e-10 * scale``.
    """
    lam, mu, eta = value
    out = []
    for i in range(3):
        uj = np.asarray(u[i])
        fac = _factor(problem.pencil(i, (lam, mu, eta)))
        if fac is None:
            fac = _factor(problem.pencil(i, (lam, mu, eta + 1e-10 * problem.scale())))
        if fac is None:
            raise SingularPencilError(f"pencil {i + 1} is singular at the Ritz value")
        z = sla.lu_solve(fac, uj, check_finite=False)
        out.append(-uj + z / np.vdot(uj, z))
    return tuple(out)


def correction_gmres(problem, value, u, r, steps, precond=None):
    """Approximate solutions of ``(I - u u^H) W (I - u u^H) v = -r`` by GMRES.

    ``precond`` is a Point; its pencil inverse is used, projected onto the
    orthogonal complement of ``u``. Each ``v_j`` is returned exactly
    orthogonal to ``u_j``.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    out = []
    for i in range(3):
        uj = np.asarray(u[i])
        w = problem.pencil(i, value)

        def proj(x, uj=uj):
            return x - uj * np.vdot(uj, x)

        def op(x, w=w, proj=proj):
            return proj(w @ proj(x))

        pc = None
        if precond is not None:
            fac = _factor(problem.pencil(i, (precond.lam, precond.mu, precond.eta)))
            if fac is not None:
                ku = sla.lu_solve(fac, uj.astype(complex), check_finite=False)
                den = np.vdot(uj, ku)

                def pc(x, fac=fac, ku=ku, den=den, uj=uj):
                    kx = sla.lu_solve(fac, x, check_finite=False)
                    return kx - ku * (np.vdot(uj, kx) / den)
        rhs = -proj(np.asarray(r[i]))
        res = gmres(op, rhs, pc, max_steps=steps)
        out.append(proj(res.x))
    return tuple(out)


# -- driver -------------------------------------------------------------------

def _ritz_order(values, target):
    d = target.distance(values)
    return np.argsort(d, kind="stable")


def _lift(bases, factors, real=False):
    x = tuple(u @ s for u, s in zip(bases, factors))
    if real and all(np.max(np.abs(np.imag(xi))) <= 1e-12 * np.linalg.norm(xi) for xi in x):
        x = tuple(np.real(xi) for xi in x)
    return normalize(x)


def _as_real(v):
    """Real representative of a phase-rotated vector (real problems only)."""
    v = np.asarray(v)
    if not np.iscomplexobj(v):
        return v
    k = np.argmax(np.abs(v))
    v = v * (abs(v[k]) / v[k]) if v[k] != 0 else v
    re = v.real
    return re if np.linalg.norm(re) > 1e-3 * np.linalg.norm(v) else v.imag


def _random_bases(rng, sizes, k, real):
    out = []
    for n in sizes:
        m = rng.standard_normal((n, min(k, n)))
        if not real:
            m = m + 1j * rng.standard_normal(m.shape)
        out.append(np.linalg.qr(m)[0])
    return out


def _pad(basis, target, rng, real):
    """Complete ``basis`` with random orthogonal directions up to ``target`` columns."""
    n = basis.shape[0]
    target = min(target, n)
    while basis.shape[1] < target:
        v = rng.standard_normal(n) if real else rng.standard_normal(n) + 1j * rng.standard_normal(n)
        basis, _ = rgs_expand(basis, v)
    return basis


def _total_residual(problem, value, x):
    return float(np.sqrt(np.sum(equation_residuals(problem, value, x) ** 2)))


def _is_duplicate(value, locked, tol):
    v = np.asarray(value)
    return any(np.max(np.abs(v - np.asarray(q.value))) <= tol for q in locked)


class _Jd:
    def __init__(self, problem, cfg, seed):
        self.p = problem
        self.cfg = cfg
        self.rng = np.random.default_rng(seed)
        self.real = problem.is_real
        self.stats = JdStats()
        self.locked = []
        self.history = [deque(maxlen=cfg.ell) for _ in range(3)]
        self.bases = _random_bases(self.rng, problem.sizes, cfg.ell, self.real)

    def extract(self):
        """Projected spectrum; re-randomizes the newest columns once if singular."""
        for attempt in range(2):
            try:
                return direct_spectrum(project(self.p, self.bases), strict=False,
                                       allow_singular=True)
            except SingularDeltaError:
                if attempt:
                    raise
                for j, u in enumerate(self.bases):
                    if u.shape[1] > 1:
                        self.bases[j] = _pad(u[:, :-1], u.shape[1], self.rng, self.real)

    def try_accept(self, x):
        cfg = self.cfg
        self.stats.trqi_runs += 1
        out = trqi(self.p, x, max_steps=cfg.trqi_steps, tol=cfg.eps)
        if not out.converged:
            return False
        pair = out.pair
        if selection_ratio(pair.x, self.locked, self.p) >= cfg.xi2:
            return False
        if _is_duplicate(pair.value, self.locked, 10 * cfg.eps):
            return False
        try:
            y = left_eigenvector(self.p, pair.value)
        except NotAnEigenvalueError:
            return False
        x = pair.x
        value = pair.value
        if self.real and all(abs(np.imag(t)) <= 1e-12 * max(1.0, abs(t)) for t in value):
            value = EigenTriple(*(complex(np.real(t)) for t in value))
        res = _total_residual(self.p, value, x)
        self.locked.append(EigenPair(value, x, y, res,
                                     meta={"update": self.stats.updates,
                                           "trqi_steps": out.steps_taken}))
        return True

    def correction(self, value, u):
        cfg = self.cfg
        if isinstance(cfg.correction, Exact):
            return correction_exact(self.p, value, u)
        r = tuple(self.p.pencil(i, value) @ u[i] for i in range(3))
        pre = cfg.target if cfg.correction.use_precond else None
        return correction_gmres(self.p, value, u, r, cfg.correction.steps, pre)

    def expand(self, value, u):
        cfg = self.cfg
        try:
            v = self.correction(value, u)
        except SingularPencilError:
            v = tuple(self.rng.standard_normal(n) for n in self.p.sizes)
            self.stats.random_expansions += 1
        if self.real:
            u = tuple(_as_real(x) for x in u)
            v = tuple(_as_real(x) for x in v)
        grew = False
        for j in range(3):
            self.history[j].append(u[j] + v[j])
            if np.linalg.norm(v[j]) == 0:
                continue
            self.bases[j], ok = rgs_expand(self.bases[j], v[j])
            grew |= ok
        if not grew:
            # stagnation: every correction lies in the current space
            for j in range(3):
                if self.bases[j].shape[1] < self.p.sizes[j]:
                    self.bases[j] = _pad(self.bases[j], self.bases[j].shape[1] + 1,
                                         self.rng, self.real)
                    grew = True
            self.stats.random_expansions += 1
        self.stats.updates += 1
        if max(b.shape[1] for b in self.bases) > cfg.max_dim:
            self.restart(u)
        return grew

    def restart(self, u):
        """New bases from the current Ritz vector and the last ``ell`` values of ``u + v``."""
        cfg = self.cfg
        for j in range(3):
            cols = [u[j]] + list(reversed(self.history[j]))
            basis = orthonormalize(np.column_stack(cols))
            basis = basis[:, :cfg.ell]
            self.bases[j] = _pad(basis, cfg.ell, self.rng, self.real)
        self.stats.restarts += 1

    def run(self):
        cfg = self.cfg
        t0 = time.perf_counter()
        while len(self.locked) < cfg.want and self.stats.updates < cfg.max_updates:
            self.stats.iterations += 1
            spec = self.extract()
            order = _ritz_order(spec.values, cfg.target)
            chosen = None
            fallback = None
            best = None
            for k in order:
                if len(self.locked) >= cfg.want:
                    break
                value = EigenTriple(*spec.values[k])
                u = _lift(self.bases, spec.vector(k), self.real)
                ratio = selection_ratio(u, self.locked, self.p)
                if best is None or ratio < best[0]:
                    best = (ratio, value, u)
                if ratio >= cfg.xi1:
                    continue
                res = _total_residual(self.p, value, u)
                if res <= cfg.delta:
                    if self.try_accept(u):
                        continue
                    self.stats.rejected += 1
                    if fallback is None:
                        fallback = (value, u)
                    continue
                chosen = (value, u)
                break
            if len(self.locked) >= cfg.want:
                break
            chosen = chosen or fallback or (best[1:] if best else None)
            full = all(b.shape[1] >= n for b, n in zip(self.bases, self.p.sizes))
            if chosen is None or full:
                break
            try:
                self.expand(*chosen)
            except SingularQuotientError:
                break
        self.stats.wall_time = time.perf_counter() - t0
        return JdResult(self.locked, self.stats)


def jd_solve(problem, cfg=None, seed=0):
    """Run the Jacobi-Davidson method; returns the locked pairs in retrieval order."""
    cfg = cfg or JdConfig()
    return _Jd(problem, cfg, seed).run()
