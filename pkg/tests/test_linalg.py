"""Iterative kernels against dense decomposition oracles.

Every numerical assertion here is checked against numpy's dense SVD / eigh /
solve, which the production code never calls.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coca.errors import ConvergenceError, DegenerateInputError, SingularMatrixError
from coca.linalg import (angle_between, canonical_sign, leading_eigenvector,
                         leading_singular_triplet, spd_solve, start_vector)


def _rng(seed):
    return np.random.default_rng(seed)


def _random_symmetric(p, seed, gap=1.0):
    # eigenvalues spaced so the leading one is simple by construction
    rng = _rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    vals = np.sort(rng.uniform(0.5, 2.0, size=p))
    vals[-1] = vals[-2] + gap
    return (q * vals) @ q.T, vals[-1], q[:, -1]


def test_canonical_sign_flips_negative_peak():
    assert canonical_sign(np.array([0.1, -2.0, 0.5])) == -1.0
    assert canonical_sign(np.array([0.1, 2.0, -0.5])) == 1.0
    assert canonical_sign(np.array([])) == 1.0


def test_angle_between_known_values():
    e1 = np.array([1.0, 0.0])
    e2 = np.array([0.0, 1.0])
    assert angle_between(e1, e2) == pytest.approx(np.pi / 2)
    assert angle_between(e1, e1) == pytest.approx(0.0)
    # sign invariance
    assert angle_between(e1, -e1) == pytest.approx(0.0)
    assert angle_between(e1, np.array([1.0, 1.0])) == pytest.approx(np.pi / 4)


def test_angle_between_rejects_zero_vector():
    with pytest.raises(DegenerateInputError):
        angle_between(np.zeros(3), np.ones(3))


def test_start_vector_is_deterministic_unit():
    a = start_vector(7, seed=3)
    b = start_vector(7, seed=3)
    assert np.array_equal(a, b)
    assert np.linalg.norm(a) == pytest.approx(1.0)
    assert not np.array_equal(a, start_vector(7, seed=4))
    with pytest.raises(ValueError):
        start_vector(0, seed=0)


@pytest.mark.parametrize("p,seed", [(3, 0), (8, 1), (25, 2)])
def test_leading_eigenvector_matches_eigh_oracle(p, seed):
    a, lam_true, v_true = _random_symmetric(p, seed)
    v, lam = leading_eigenvector(lambda w: a @ w, p, seed=seed)
    assert lam == pytest.approx(lam_true, rel=1e-7)
    assert angle_between(v, v_true) < 1e-6
    assert np.linalg.norm(v) == pytest.approx(1.0)
    # residual contract
    assert np.linalg.norm(a @ v - lam * v) <= 1e-8 * abs(lam) * 1.01
    assert canonical_sign(v) == 1.0


def test_leading_eigenvector_honors_v0():
    a, _, v_true = _random_symmetric(6, seed=5)
    v, _ = leading_eigenvector(lambda w: a @ w, 6, v0=v_true + 1e-3)
    assert angle_between(v, v_true) < 1e-6


def test_leading_eigenvector_rejects_bad_v0():
    a = np.eye(4)
    with pytest.raises(ValueError):
        leading_eigenvector(lambda w: a @ w, 4, v0=np.zeros(4))
    with pytest.raises(ValueError):
        leading_eigenvector(lambda w: a @ w, 4, v0=np.ones(3))
    with pytest.raises(ValueError):
        leading_eigenvector(lambda w: a @ w, 4, v0=np.array([1.0, np.nan, 0, 0]))


def test_leading_eigenvector_parameter_validation():
    a = np.eye(3)
    with pytest.raises(ValueError):
        leading_eigenvector(lambda w: a @ w, 3, tol=0.0)
    with pytest.raises(ValueError):
        leading_eigenvector(lambda w: a @ w, 3, max_iter=0)


def test_leading_eigenvector_magnitude_tie_raises():
    # +1/-1 eigenvalues: the power sequence oscillates and never settles
    a = np.diag([1.0, -1.0])
    with pytest.raises(ConvergenceError) as exc:
        leading_eigenvector(lambda w: a @ w, 2, max_iter=200)
    assert exc.value.iterations == 200
    assert exc.value.last_iterate.shape == (2,)


def test_leading_eigenvector_zero_operator_degenerate():
    with pytest.raises(DegenerateInputError):
        leading_eigenvector(lambda w: np.zeros_like(w), 3)


@pytest.mark.parametrize("n,p,seed", [(10, 4, 0), (6, 9, 1), (40, 12, 2)])
def test_leading_singular_triplet_matches_svd_oracle(n, p, seed):
    x = _rng(seed).standard_normal((n, p))
    u_o, s_o, vt_o = np.linalg.svd(x, full_matrices=False)
    t = leading_singular_triplet(x, seed=seed)
    assert t.d == pytest.approx(s_o[0], rel=1e-8)
    assert angle_between(t.v, vt_o[0]) < 1e-6
    assert angle_between(t.u, u_o[:, 0]) < 1e-6
    # u is exactly the image of v, scaled
    assert np.allclose(x @ t.v, t.d * t.u)
    assert canonical_sign(t.v) == 1.0


def test_leading_singular_triplet_rejects_degenerate_inputs():
    with pytest.raises(DegenerateInputError):
        leading_singular_triplet(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        leading_singular_triplet(np.ones(3))
    with pytest.raises(ValueError):
        leading_singular_triplet(np.array([[1.0, np.inf], [0.0, 1.0]]))


@pytest.mark.parametrize("p,seed", [(4, 0), (12, 1), (30, 2)])
def test_spd_solve_matches_dense_oracle(p, seed):
    rng = _rng(seed)
    m = rng.standard_normal((p, p))
    a = m @ m.T + p * np.eye(p)
    b = rng.standard_normal(p)
    x = spd_solve(a, b)
    assert np.allclose(x, np.linalg.solve(a, b), rtol=1e-10, atol=1e-12)
    # refinement leaves a near machine-level residual
    assert np.linalg.norm(a @ x - b) <= 1e-12 * np.linalg.norm(b) * np.linalg.cond(a)


def test_spd_solve_rejects_asymmetric():
    a = np.array([[2.0, 1.0], [0.0, 2.0]])
    with pytest.raises(ValueError):
        spd_solve(a, np.ones(2))


def test_spd_solve_singular_reports_pivot():
    a = np.diag([1.0, 0.0, 2.0])
    with pytest.raises(SingularMatrixError) as exc:
        spd_solve(a, np.ones(3))
    assert exc.value.pivot == 2


def test_spd_solve_shape_validation():
    with pytest.raises(ValueError):
        spd_solve(np.ones((2, 3)), np.ones(2))
    with pytest.raises(ValueError):
        spd_solve(np.eye(2), np.ones(3))


@settings(deadline=None, max_examples=30)
@given(p=st.integers(2, 20), seed=st.integers(0, 10_000))
def test_spd_solve_roundtrip_property(p, seed):
    rng = _rng(seed)
    m = rng.standard_normal((p, p))
    a = m @ m.T + p * np.eye(p)
    x0 = rng.standard_normal(p)
    x = spd_solve(a, a @ x0)
    assert np.allclose(x, x0, rtol=1e-8, atol=1e-10)


@settings(deadline=None, max_examples=25)
@given(p=st.integers(2, 15), seed=st.integers(0, 10_000))
def test_power_iteration_residual_contract_property(p, seed):
    a, _, _ = _random_symmetric(p, seed, gap=0.5)
    v, lam = leading_eigenvector(lambda w: a @ w, p, seed=seed)
    assert np.linalg.norm(a @ v - lam * v) <= 1e-8 * abs(lam) * 1.01
