"""PCA/CCA baselines against dense decomposition oracles and CCA invariances."""

import numpy as np
import pytest

from coca.baselines import cca_leading, pca_leading
from coca.data import MultiViewData, standardize
from coca.errors import SingularMatrixError


def _angle(a, b):
    c = abs(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b))
    return float(np.arccos(min(1.0, c)))


def _views(n=50, p1=4, p2=3, seed=0, shared=1.0):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n)
    x1 = shared * np.outer(z, rng.standard_normal(p1)) + rng.standard_normal((n, p1))
    x2 = shared * np.outer(z, rng.standard_normal(p2)) + rng.standard_normal((n, p2))
    d, _ = standardize(MultiViewData(x1, x2))
    return d.x1, d.x2


def _cca_oracle(x1, x2):
    c11 = x1.T @ x1
    c22 = x2.T @ x2
    w1, q1 = np.linalg.eigh(c11)
    w2, q2 = np.linalg.eigh(c22)
    isq1 = (q1 / np.sqrt(w1)) @ q1.T
    isq2 = (q2 / np.sqrt(w2)) @ q2.T
    u, s, vt = np.linalg.svd(isq1 @ (x1.T @ x2) @ isq2)
    return isq1 @ u[:, 0], isq2 @ vt[0], float(s[0])


def test_pca_leading_matches_svd():
    x1, _ = _views(seed=1)
    v, d = pca_leading(x1)
    _, s_o, vt_o = np.linalg.svd(x1, full_matrices=False)
    assert d == pytest.approx(s_o[0], rel=1e-8)
    assert _angle(v, vt_o[0]) < 1e-6


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_cca_leading_matches_whitening_oracle(seed):
    x1, x2 = _views(seed=seed, shared=1.3)
    sol = cca_leading(x1, x2)
    a1, a2, s = _cca_oracle(x1, x2)
    assert _angle(sol.w1, a1) < 1e-6
    assert _angle(sol.w2, a2) < 1e-6
    assert sol.correlation == pytest.approx(s, abs=1e-8)


def test_cca_scores_unit_norm_and_pearson_identity():
    x1, x2 = _views(seed=4)
    sol = cca_leading(x1, x2)
    s1, s2 = x1 @ sol.w1, x2 @ sol.w2
    assert np.linalg.norm(s1) == pytest.approx(1.0)
    assert np.linalg.norm(s2) == pytest.approx(1.0)
    assert sol.correlation == pytest.approx(np.corrcoef(s1, s2)[0, 1])
    assert sol.correlation >= 0


def test_cca_invariant_to_invertible_view_transforms():
    x1, x2 = _views(seed=5, shared=1.2)
    rng = np.random.default_rng(6)
    a = rng.standard_normal((4, 4)) + 4 * np.eye(4)
    b = rng.standard_normal((3, 3)) + 4 * np.eye(3)
    base = cca_leading(x1, x2)
    moved = cca_leading(x1 @ a, x2 @ b)
    assert moved.correlation == pytest.approx(base.correlation, abs=1e-8)
    # directions map through the inverse transforms
    assert _angle(a @ moved.w1, base.w1) < 1e-5
    assert _angle(b @ moved.w2, base.w2) < 1e-5


def test_cca_duplicated_views_have_unit_correlation():
    x1, _ = _views(seed=7)
    sol = cca_leading(x1, x1.copy())
    assert sol.correlation == pytest.approx(1.0, abs=1e-10)
    assert np.allclose(x1 @ sol.w1, x1 @ sol.w2, atol=1e-8)


def test_cca_orthogonal_views_report_zero():
    rng = np.random.default_rng(8)
    x1 = rng.standard_normal((40, 3))
    raw = rng.standard_normal((40, 2))
    # project view 2 onto the orthogonal complement of view 1's column space
    q, _ = np.linalg.qr(x1)
    x2 = raw - q @ (q.T @ raw)
    assert np.abs(x1.T @ x2).max() < 1e-12
    sol = cca_leading(x1, x2)
    assert sol.correlation == 0.0
    assert np.linalg.norm(x1 @ sol.w1) == pytest.approx(1.0)


def test_cca_singular_gram_raises_and_ridge_rescues():
    rng = np.random.default_rng(9)
    x1 = rng.standard_normal((20, 3))
    x1 = np.column_stack([x1, x1[:, 0]])  # exact collinearity
    x2 = rng.standard_normal((20, 2))
    with pytest.raises(SingularMatrixError, match="ridge"):
        cca_leading(x1, x2)
    sol = cca_leading(x1, x2, ridge=1e-6)
    assert np.isfinite(sol.correlation)


def test_cca_validation():
    rng = np.random.default_rng(10)
    with pytest.raises(ValueError):
        cca_leading(rng.standard_normal((5, 2)), rng.standard_normal((6, 2)))
    with pytest.raises(ValueError):
        cca_leading(rng.standard_normal((5, 2)), rng.standard_normal((5, 2)),
                    ridge=-1.0)


def test_cca_correlation_bounded_by_one():
    for seed in range(6):
        x1, x2 = _views(seed=seed, shared=2.0)
        sol = cca_leading(x1, x2)
        assert 0.0 <= sol.correlation <= 1.0 + 1e-12
