import numpy as np
from hypothesis import given, settings, strategies as st

from conftest import random_problem
from mep3.core import EigenTriple, normalize
from mep3.discretize import gen_random_diag
from mep3.trqi import newton_function, newton_jacobian, trqi, trqi_step


def _pack(x, value):
    return np.concatenate([*x, value])


def _unpack(z, sizes):
    off = np.concatenate([[0], np.cumsum(sizes)])
    return tuple(z[off[i]:off[i + 1]] for i in range(3)), z[off[-1]:]


@settings(max_examples=50)
@given(st.integers(0, 2 ** 32 - 1))
def test_jacobian_matches_central_differences(seed):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, (2, 3, 2), complex_=True)
    x = tuple(rng.standard_normal(n) + 1j * rng.standard_normal(n) for n in p.sizes)
    anchors = tuple(rng.standard_normal(n) for n in p.sizes)
    value = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    z0 = _pack(x, value)
    jac = newton_jacobian(p, x, value, anchors)
    h = 1e-6
    fd = np.empty_like(jac)
    for k in range(z0.size):
        e = np.zeros(z0.size)
        e[k] = h
        fp = newton_function(p, *_unpack(z0 + e, p.sizes), anchors)
        fm = newton_function(p, *_unpack(z0 - e, p.sizes), anchors)
        fd[:, k] = (fp - fm) / (2 * h)
    assert np.linalg.norm(fd - jac) <= 1e-6 * np.linalg.norm(jac)


def test_trqi_converges_fast_from_perturbed_vector():
    p, orc = gen_random_diag(5, seed=3)
    rng = np.random.default_rng(0)
    flat = 42
    x = normalize(orc.right_vectors(flat))
    x0 = tuple(xi + 1e-3 * rng.standard_normal(xi.size) for xi in x)
    out = trqi(p, x0, max_steps=5, tol=1e-12)
    assert out.converged
    assert out.steps_taken <= 4
    assert np.allclose(out.pair.value, orc.values[flat], atol=1e-10)
    h = out.residual_history
    # quadratic or better once close
    assert h[2] <= 10 * h[1] ** 1.5


def test_trqi_step_fixed_point():
    p, orc = gen_random_diag(3, seed=1)
    x = normalize(orc.right_vectors(5))
    new, value = trqi_step(p, x)
    assert np.allclose(value, orc.values[5], atol=1e-12)
    for a, b in zip(new, x):
        assert abs(abs(np.vdot(a, b)) - 1) < 1e-10


def test_trqi_zero_steps_reports_rayleigh_residual():
    p, orc = gen_random_diag(3, seed=1)
    x = normalize(orc.right_vectors(5))
    out = trqi(p, x, max_steps=0)
    assert out.steps_taken == 0 and out.converged
    assert isinstance(out.pair.value, EigenTriple)
