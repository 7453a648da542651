"""Dense linear-algebra kernels.

Power iteration for the leading eigenpair of a linear operator and for the
leading singular triplet of a matrix, plus a Cholesky-based solver for
symmetric positive definite systems. Production code uses only these
iterative kernels; full dense decompositions appear solely as independent
oracles in the test suite.

Determinism: start vectors are derived from the seed alone (normalized
all-ones plus a small seeded perturbation), and returned vectors are sign
canonicalized so that the entry of largest magnitude is positive. Two runs
with identical inputs and seeds produce bit-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import get_lapack_funcs

from .errors import ConvergenceError, DegenerateInputError, SingularMatrixError

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 5000


@dataclass(frozen=True)
class SingularTriplet:
    """Leading singular value ``d`` and unit vectors ``u`` (left), ``v`` (right)."""

    d: float
    u: np.ndarray
    v: np.ndarray


def canonical_sign(v):
    """Return -1.0 if the largest-magnitude entry of ``v`` is negative, else 1.0."""
    v = np.asarray(v)
    if v.size == 0:
        return 1.0
    return -1.0 if v[np.argmax(np.abs(v))] < 0 else 1.0


def angle_between(a, b):
    """Sign-invariant angle in radians between two nonzero vectors."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise DegenerateInputError("angle undefined for a zero vector")
    c = abs(a @ b) / (na * nb)
    return float(np.arccos(min(1.0, c)))


def start_vector(p, seed):
    """Deterministic unit start vector: all-ones perturbed by the seed.

    The perturbation breaks exact orthogonality to eigenvectors that are
    orthogonal to the all-ones direction.
    """
    if p < 1:
        raise ValueError("dimension must be positive")
    rng = np.random.default_rng(seed)
    w = np.ones(p) + 1e-2 * rng.standard_normal(p)
    return w / np.linalg.norm(w)


def leading_eigenvector(apply, p, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                        seed=0, v0=None):
    """Power iteration for the dominant eigenpair of a linear operator.

    ``apply`` maps a length-``p`` vector to a length-``p`` vector. The
    operator must have a real, simple, positive dominant eigenvalue for the
    iteration to converge. Returns ``(w, lam)`` with ``||w|| = 1`` and
    ``||apply(w) - lam * w|| <= tol * |lam|``; ``w`` is sign canonicalized.

    Raises ConvergenceError (carrying the last iterate and residual) when the
    residual test is not met within ``max_iter`` applications, which is also
    how magnitude ties between leading eigenvalues surface. Raises
    DegenerateInputError when the operator annihilates the iterate.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if v0 is not None:
        w = np.asarray(v0, dtype=float).ravel().copy()
        nw = np.linalg.norm(w)
        if w.shape != (p,) or nw == 0 or not np.all(np.isfinite(w)):
            raise ValueError("v0 must be a finite nonzero vector of length p")
        w /= nw
    else:
        w = start_vector(p, seed)

    lam = 0.0
    residual = np.inf
    for it in range(1, max_iter + 1):
        y = apply(w)
        y = np.asarray(y, dtype=float).ravel()
        ny = np.linalg.norm(y)
        if ny == 0:
            raise DegenerateInputError("operator maps the iterate to zero")
        lam = float(w @ y)
        residual = float(np.linalg.norm(y - lam * w))
        if abs(lam) > 0 and residual <= tol * abs(lam):
            s = canonical_sign(w)
            return s * w, lam
        w = y / ny
    raise ConvergenceError(
        f"power iteration did not reach tol={tol:g} in {max_iter} iterations "
        f"(residual {residual:.3e}); possible eigenvalue magnitude tie",
        last_iterate=w, residual=residual, iterations=max_iter)


def leading_singular_triplet(X, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, seed=0):
    """Leading singular triplet of ``X`` by power iteration on the Gram operator.

    Returns SingularTriplet(d, u, v) with ``||Xv - d u|| = 0`` by construction
    and ``||X'u - d v|| <= tol * d``. The right vector is sign canonicalized
    and ``u`` flipped consistently. Raises DegenerateInputError for the zero
    matrix, ConvergenceError on iteration exhaustion.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.size == 0:
        raise ValueError("X must be a nonempty 2-d array")
    if not np.all(np.isfinite(X)):
        raise ValueError("X must have finite entries")
    p = X.shape[1]

    def gram(w):
        return X.T @ (X @ w)

    v, lam = leading_eigenvector(gram, p, tol=tol, max_iter=max_iter, seed=seed)
    if lam <= 0:
        raise DegenerateInputError("matrix has no positive leading singular value")
    z = X @ v
    d = float(np.linalg.norm(z))
    if d == 0:
        raise DegenerateInputError("matrix maps the leading direction to zero")
    return SingularTriplet(d=d, u=z / d, v=v)


def _spd_factor(A):
    """Cholesky factor of a symmetric positive definite matrix (upper).

    Raises SingularMatrixError carrying the 1-based failing pivot index.
    """
    A = np.ascontiguousarray(A, dtype=float)
    potrf, = get_lapack_funcs(('potrf',), (A,))
    c, info = potrf(A, lower=False, overwrite_a=False)
    if info > 0:
        raise SingularMatrixError(
            f"matrix is not positive definite: leading minor of order {info} "
            f"is singular or negative", pivot=int(info))
    if info < 0:
        raise ValueError(f"illegal value in argument {-info} of internal potrf")
    return c


def _spd_solve_factored(c, b):
    potrs, = get_lapack_funcs(('potrs',), (c,))
    x, info = potrs(c, b, lower=False)
    if info != 0:
        raise ValueError(f"internal potrs failed with info={info}")
    return x


def spd_solve(A, b):
    """Solve ``A x = b`` for symmetric positive definite ``A``.

    ``A`` must be symmetric to a relative 1e-10; it is symmetrized before
    factorization to absorb accumulation noise from matrix products. One step
    of iterative refinement tightens the residual. Raises SingularMatrixError
    with the failing pivot index when ``A`` is not positive definite.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if b.shape[0] != A.shape[0]:
        raise ValueError("b length does not match A")
    scale = max(1.0, float(np.abs(A).max(initial=0.0)))
    if float(np.abs(A - A.T).max(initial=0.0)) > 1e-10 * scale:
        raise ValueError("A is not symmetric within tolerance")
    As = 0.5 * (A + A.T)
    c = _spd_factor(As)
    x = _spd_solve_factored(c, b)
    # one refinement step: cheap, and keeps the residual near machine level
    r = b - As @ x
    x = x + _spd_solve_factored(c, r)
    return x
