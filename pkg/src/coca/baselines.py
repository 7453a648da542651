"""Reference single-component methods: leading PC and leading canonical pair.

The canonical pair is computed by whitening: with R1 = X1'X1 + ridge I and
R2 = X2'X2 + ridge I, the leading singular triplet of

    M = R1^{-1/2} (X1'X2) R2^{-1/2}

is un-whitened to weights (w1, w2), normalized so ||X1 w1|| = ||X2 w2|| = 1,
with the reported correlation the empirical Pearson correlation of the two
score vectors. Inverse square roots come from symmetric eigendecompositions;
a singular Gram matrix at ridge = 0 raises with advice to add a ridge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularMatrixError
from .linalg import (DEFAULT_MAX_ITER, DEFAULT_TOL, canonical_sign,
                     leading_singular_triplet)


@dataclass
class CcaSolution:
    """Weight pair with unit score norms and their score correlation (>= 0)."""

    w1: np.ndarray
    w2: np.ndarray
    correlation: float


def pca_leading(X, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, seed=0):
    """Leading right singular vector and singular value of ``X``."""
    trip = leading_singular_triplet(X, tol=tol, max_iter=max_iter, seed=seed)
    return trip.v, trip.d


def _inv_sqrt(gram, label):
    w, vecs = np.linalg.eigh(gram)
    if w[-1] <= 0 or w[0] <= 1e-12 * w[-1]:
        raise SingularMatrixError(
            f"{label} Gram matrix is singular; add a positive ridge")
    return (vecs / np.sqrt(w)) @ vecs.T


def cca_leading(X1, X2, ridge=0.0, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                seed=0):
    """Leading canonical direction pair of two column-centered views."""
    X1 = np.asarray(X1, dtype=float)
    X2 = np.asarray(X2, dtype=float)
    if X1.shape[0] != X2.shape[0]:
        raise ValueError("views disagree on sample count")
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    r1 = X1.T @ X1 + ridge * np.eye(X1.shape[1])
    r2 = X2.T @ X2 + ridge * np.eye(X2.shape[1])
    isq1 = _inv_sqrt(r1, "view 1")
    isq2 = _inv_sqrt(r2, "view 2")
    m = isq1 @ (X1.T @ X2) @ isq2

    if np.abs(m).max(initial=0.0) <= 1e-12:
        # orthogonal views: no canonical correlation; report a deterministic
        # unit-score pair with correlation zero
        w1 = isq1[:, 0]
        w2 = isq2[:, 0]
        corr = 0.0
    else:
        trip = leading_singular_triplet(m, tol=tol, max_iter=max_iter, seed=seed)
        w1 = isq1 @ trip.u
        w2 = isq2 @ trip.v
        corr = None

    s1 = X1 @ w1
    s2 = X2 @ w2
    n1, n2 = np.linalg.norm(s1), np.linalg.norm(s2)
    if n1 == 0 or n2 == 0:
        raise SingularMatrixError("a canonical score vector vanished; add a ridge")
    w1, w2 = w1 / n1, w2 / n2
    if corr is None:
        corr = float(np.corrcoef(X1 @ w1, X2 @ w2)[0, 1])
    s = canonical_sign(w1)
    w1 = s * w1
    corr *= s
    if corr < 0:
        w2, corr = -w2, -corr
    return CcaSolution(w1=w1, w2=w2, correlation=float(corr))
