import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_problem
from mep3.core import (EtaPlane, Point, ThreeParamProblem, match_spectra, normalize,
                       precondition_inverse_A, shift_substitute, spectrum_array)
from mep3.discretize import gen_random_diag
from mep3.jd import (Exact, Gmres, JdConfig, _Jd, correction_exact, correction_gmres,
                     jd_solve)
from mep3.kernels import orthonormality_error

seeds = st.integers(0, 2 ** 32 - 1)


def test_correction_exact_closed_form_2x2():
    # W = diag(2, 5), u = e1 + e2 normalized: z = W^{-1} u, v = -u + z / (u^H z)
    a = np.diag([2.0, 5.0])
    z2 = np.zeros((2, 2))
    p = ThreeParamProblem((a, a, a), (z2, z2, z2), (z2, z2, z2), (z2, z2, z2))
    u = np.array([1.0, 1.0]) / np.sqrt(2)
    v = correction_exact(p, (0, 0, 0), (u, u, u))
    z = np.array([0.5, 0.2]) / np.sqrt(2)
    expect = -u + z / (u @ z)
    for vi in v:
        assert np.allclose(vi, expect)


@given(seeds, st.booleans())
def test_correction_exact_solves_projected_equation(seed, cplx):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, (4, 3, 5), complex_=cplx)
    u = normalize(tuple(rng.standard_normal(n) + 1j * rng.standard_normal(n) for n in p.sizes))
    value = tuple(rng.standard_normal(3))
    v = correction_exact(p, value, u)
    for i in range(3):
        w = p.pencil(i, value)
        r = w @ u[i]
        proj = lambda x, ui=u[i]: x - ui * np.vdot(ui, x)  # noqa: E731
        assert abs(np.vdot(u[i], v[i])) < 1e-10 * np.linalg.norm(v[i]) + 1e-12
        lhs = proj(w @ v[i])
        assert np.linalg.norm(lhs + proj(r)) < 1e-8 * (np.linalg.norm(r) + np.linalg.norm(lhs))


@given(seeds, st.booleans())
def test_correction_gmres_exact_in_full_krylov_space(seed, precond):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, (4, 3, 5))
    u = normalize(tuple(rng.standard_normal(n) for n in p.sizes))
    value = tuple(rng.standard_normal(3))
    r = tuple(p.pencil(i, value) @ u[i] for i in range(3))
    pc = Point(0.1, 0.0, -0.1) if precond else None
    v = correction_gmres(p, value, u, r, steps=6, precond=pc)
    exact = correction_exact(p, value, u)
    for a, b in zip(v, exact):
        assert np.linalg.norm(a - b) < 1e-7 * max(1, np.linalg.norm(b))


def test_correction_gmres_zero_residual():
    rng = np.random.default_rng(1)
    p = random_problem(rng, (3, 3, 3))
    u = normalize(tuple(rng.standard_normal(3) for _ in range(3)))
    v = correction_gmres(p, (0, 0, 0), u, tuple(np.zeros(3) for _ in range(3)), steps=3)
    assert all(not np.any(vi) for vi in v)
    with pytest.raises(ValueError):
        correction_gmres(p, (0, 0, 0), u, u, steps=0)


def test_config_validation():
    with pytest.raises(ValueError):
        JdConfig(eps=1.0, delta=0.1)
    with pytest.raises(ValueError):
        JdConfig(ell=11, max_dim=10)
    with pytest.raises(ValueError):
        JdConfig(xi1=1e-5, xi2=1e-4)
    with pytest.raises(ValueError):
        JdConfig(target=EtaPlane(), correction=Gmres(use_precond=True))
    assert isinstance(JdConfig(target=Point(0, 0, 0)).correction, Gmres)
    assert isinstance(JdConfig().correction, Exact)


def test_restart_invariant():
    p, _ = gen_random_diag(6, seed=2)
    cfg = JdConfig(ell=3, max_dim=5)
    jd = _Jd(p, cfg, seed=0)
    rng = np.random.default_rng(0)
    u = normalize(tuple(rng.standard_normal(6) for _ in range(3)))
    for j in range(3):
        for _ in range(4):
            jd.history[j].append(rng.standard_normal(6))
    jd.restart(u)
    for j, b in enumerate(jd.bases):
        assert b.shape == (6, 3)
        assert orthonormality_error(b) < 1e-12
        # the current Ritz vector survives every restart
        assert np.linalg.norm(u[j] - b @ (b.T @ u[j])) < 1e-12
    assert jd.stats.restarts == 1


def _check_against_oracle(pairs, oracle_values, tol):
    got = spectrum_array(pairs)
    _, err = match_spectra(got, oracle_values)
    assert err.max() < tol
    # no duplicates
    d = np.max(np.abs(got[:, None] - got[None]), axis=2) + np.eye(len(got))
    assert d.min() > 1e-6


def test_jd_eta_plane_random():
    p, orc = gen_random_diag(6, seed=4)
    eta_tar = orc.values[:, 2].min() - 0.05
    q = shift_substitute(p, eta_tar)
    res = jd_solve(q, JdConfig(target=EtaPlane(0), want=4, delta=1e-6, eps=1e-10,
                               trqi_steps=3, max_updates=200), seed=0)
    assert len(res.pairs) == 4
    ref = orc.values.copy()
    ref[:, 2] -= eta_tar
    _check_against_oracle(res.pairs, ref, 1e-8)
    nearest = np.sort(np.abs(ref[:, 2]))[:4]
    assert np.allclose(np.sort(np.abs(spectrum_array(res.pairs)[:, 2].real)), nearest)
    for pr in res.pairs:
        assert pr.y is not None and pr.residual_norm <= 1e-10


def test_jd_point_target_gmres():
    p, orc = gen_random_diag(6, seed=5)
    q = precondition_inverse_A(p)
    target = Point(0.0, 0.0, 0.0)
    res = jd_solve(q, JdConfig(target=target, want=3, max_updates=200), seed=1)
    assert len(res.pairs) == 3
    _check_against_oracle(res.pairs, orc.values, 1e-7)
    assert res.stats.updates <= 200


def test_jd_is_deterministic():
    p, _ = gen_random_diag(5, seed=8)
    cfg = JdConfig(target=Point(0, 0, 0), want=3, correction=Exact())
    a = jd_solve(p, cfg, seed=3)
    b = jd_solve(p, cfg, seed=3)
    assert np.array_equal(spectrum_array(a.pairs), spectrum_array(b.pairs))


def test_jd_want_zero_and_update_cap():
    p, _ = gen_random_diag(5, seed=8)
    assert jd_solve(p, JdConfig(want=0)).pairs == []
    res = jd_solve(p, JdConfig(want=50, max_updates=3))
    assert res.stats.updates <= 3
