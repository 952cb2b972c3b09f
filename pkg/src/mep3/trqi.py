"""Tensor Rayleigh quotient iteration: Newton refinement of eigenpairs."""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .core import (EigenPair, MepError, SingularQuotientError, equation_residuals,
                   normalize, rayleigh_triple)

PIVOT_TOL = 1e-14
DIVERGENCE_FACTOR = 1e6


class SingularJacobianError(MepError):
    pass


@dataclass
class TrqiOutcome:
    pair: EigenPair
    steps_taken: int
    converged: bool
    residual_history: list = field(default_factory=list)
    reason: str = ""


def newton_function(problem, x, value, anchors):
    """Stacked residuals and normalization defects ``F(x, value)``."""
    parts = [problem.pencil(i, value) @ x[i] for i in range(3)]
    parts.append(np.array([np.vdot(anchors[i], x[i]) - 1 for i in range(3)]))
    return np.concatenate(parts)


def newton_jacobian(problem, x, value, anchors):
    """Jacobian of :func:`newton_function` in ``(x1, x2, x3, lam, mu, eta)``."""
    n = problem.sizes
    off = np.concatenate([[0], np.cumsum(n)])
    size = off[-1] + 3
    dtype = np.result_type(*[xi for xi in x], *problem.A, np.asarray(value).dtype, np.float64)
    jac = np.zeros((size, size), dtype=dtype)
    for i in range(3):
        a, b, c, d = problem.matrices(i)
        rows = slice(off[i], off[i + 1])
        jac[rows, rows] = problem.pencil(i, value)
        jac[rows, off[-1]] = -(b @ x[i])
        jac[rows, off[-1] + 1] = -(c @ x[i])
        jac[rows, off[-1] + 2] = -(d @ x[i])
        jac[off[-1] + i, rows] = np.conj(anchors[i])
    return jac


def trqi_step(problem, x):
    """One Newton step from ``x`` with the Rayleigh triple as eigenvalue guess.

    Returns the renormalized components and their Rayleigh triple.
    """
    x = normalize(x)
    value = rayleigh_triple(problem, x)
    f = newton_function(problem, x, value, x)
    jac = newton_jacobian(problem, x, value, x)
    lu, piv = sla.lu_factor(jac, check_finite=False)
    diag = np.abs(np.diag(lu))
    if diag.min() <= PIVOT_TOL * max(diag.max(), 1e-300):
        raise SingularJacobianError("Newton system is numerically singular")
    delta = sla.lu_solve((lu, piv), -f, check_finite=False)
    n = problem.sizes
    off = np.concatenate([[0], np.cumsum(n)])
    new = normalize(tuple(x[i] + delta[off[i]:off[i + 1]] for i in range(3)))
    return new, rayleigh_triple(problem, new)


def _total_residual(problem, value, x):
    return float(np.sqrt(np.sum(equation_residuals(problem, value, x) ** 2)))


def trqi(problem, x, max_steps=4, tol=1e-8):
    """Iterate :func:`trqi_step` until the residual drops below ``tol``.

    Never raises on stagnation: singular Jacobians, vanishing quotients and
    divergence end the run with ``converged=False``.
    """
    x = normalize(x)
    value = rayleigh_triple(problem, x)
    history = [_total_residual(problem, value, x)]
    reason = ""
    for _ in range(max_steps):
        if history[-1] <= tol:
            break
        try:
            x_new, value_new = trqi_step(problem, x)
        except (SingularJacobianError, SingularQuotientError) as exc:
            reason = type(exc).__name__
            break
        res = _total_residual(problem, value_new, x_new)
        if not np.isfinite(res):
            reason = "nonfinite"
            break
        x, value = x_new, value_new
        history.append(res)
        if res > DIVERGENCE_FACTOR * history[0]:
            reason = "diverged"
            break
    converged = history[-1] <= tol and reason != "diverged"
    pair = EigenPair(value, x, None, history[-1])
    return TrqiOutcome(pair, len(history) - 1, converged, history, reason)
