"""End-to-end solve: transform the problem, run a solver, map results back.

The iterative solvers work on the substituted problem
``A_j + s B_j - eta_tar D_j`` premultiplied by its inverse, so every
``A_j`` becomes the identity and targets move to the origin plane.
"""
import time
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .core import (EigenTriple, EtaPlane, Point, precondition_inverse_A, shift_substitute,
                   solve_direct)
from .discretize import DiscretizationError, eigenfrequency, index_triple
from .jd import Exact, Gmres, JdConfig, jd_solve
from .si import SiConfig, si_solve

# the ellipsoidal and Baer operators have singular A_j at eta_tar = 0
DEFAULT_LAMBDA_SHIFT = {"ellipsoidal": 5.0, "baer": 5.0}
INDEX_APPS = ("ellipsoidal", "baer", "fourpoint")


@dataclass
class ReportRow:
    idx: int
    value: EigenTriple
    residual: float
    indices: Optional[tuple] = None
    omega: Optional[float] = None


@dataclass
class RunReport:
    rows: list
    method: str
    wanted: int
    stats: dict = field(default_factory=dict)


@dataclass
class SolveOptions:
    lambda_shift: Optional[float] = None
    invert_a: bool = True
    allow_singular: bool = False
    overrides: dict = field(default_factory=dict)


def _config(cls, overrides, **base):
    names = {f.name for f in fields(cls)}
    unknown = set(overrides) - names
    if unknown:
        raise ValueError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
    base.update({k: v for k, v in overrides.items() if v is not None})
    return cls(**base)


def _shifted_target(target, lambda_shift):
    if isinstance(target, Point):
        return Point(target.lam + lambda_shift, target.mu, 0.0), target.eta
    return EtaPlane(0.0), target.eta


def _map_back(value, lambda_shift, eta_tar):
    lam, mu, eta = value
    return EigenTriple(complex(lam - lambda_shift), complex(mu), complex(eta + eta_tar))


def _postprocess(bvp, pairs, lambda_shift, eta_tar):
    rows = []
    for k, p in enumerate(pairs):
        value = _map_back(p.value, lambda_shift, eta_tar)
        indices = omega = None
        if bvp.app in INDEX_APPS:
            try:
                indices = tuple(index_triple(bvp, p.x))
            except DiscretizationError:
                indices = None
            try:
                omega = float(eigenfrequency(bvp, value.eta))
            except DiscretizationError:
                omega = None
        rows.append(ReportRow(k, value, float(p.residual_norm), indices, omega))
    return rows


def run(bvp, method, target=None, want=None, seed=0, options=None):
    """Solve ``bvp`` with ``method`` in ``{"direct", "jd", "si"}``."""
    options = options or SolveOptions()
    target = target or EtaPlane(0.0)
    if method == "si" and not isinstance(target, EtaPlane):
        raise ValueError("subspace iteration needs an eta-plane target")
    shift = options.lambda_shift
    if shift is None:
        shift = DEFAULT_LAMBDA_SHIFT.get(bvp.app, 0.0) if method != "direct" else 0.0
    t0 = time.perf_counter()
    if method == "direct":
        pairs = solve_direct(bvp.problem, seed=seed, allow_singular=options.allow_singular)
        values = np.array([p.value.as_array() for p in pairs]).reshape(-1, 3)
        order = np.argsort(target.distance(values), kind="stable")
        pairs = [pairs[k] for k in order]
        rows = _postprocess(bvp, pairs, 0.0, 0.0)
        return RunReport(rows, method, len(rows), {"wall_time": time.perf_counter() - t0})
    new_target, eta_tar = _shifted_target(target, shift)
    prob = shift_substitute(bvp.problem, eta_tar, shift)
    if options.invert_a:
        prob = precondition_inverse_A(prob)
    over = dict(options.overrides)
    if want is not None:
        over["want"] = want
    if method == "jd":
        corr = over.pop("correction", None)
        gsteps = over.pop("gmres_steps", None)
        precond = over.pop("use_precond", None)
        if corr is None:
            corr = "gmres" if isinstance(new_target, Point) else "exact"
        if corr == "gmres":
            g = Gmres()
            if gsteps is not None:
                g = replace(g, steps=gsteps)
            if precond is not None:
                g = replace(g, use_precond=precond)
            if not isinstance(new_target, Point):
                g = replace(g, use_precond=False)
            correction = g
        else:
            correction = Exact()
        cfg = _config(JdConfig, over, target=new_target, correction=correction)
        res = jd_solve(prob, cfg, seed)
    elif method == "si":
        for k in ("correction", "gmres_steps", "use_precond"):
            over.pop(k, None)
        cfg = _config(SiConfig, over)
        res = si_solve(prob, cfg, seed)
    else:
        raise ValueError(f"unknown method {method!r}")
    stats = {k: v for k, v in vars(res.stats).items()}
    stats["wall_time"] = time.perf_counter() - t0
    rows = _postprocess(bvp, res.pairs, shift, eta_tar)
    return RunReport(rows, method, cfg.want, stats)
