"""Rank-one two-view factorization with a cross-view agreement penalty.

For column-centered views X1 (n x p1), X2 (n x p2) and X = [X1, X2], the
dense fit minimizes

    (1/2) ||X - u v'||_F^2 + (rho/2) ||X1 v1 - X2 v2||_2^2,   ||u||_2 = 1,

whose solution is the dominant eigenvector of (I + rho D G D)^{-1} G with
G = X'X and D = diag(I_{p1}, -I_{p2}); it is computed by power iteration
with the system matrix factorized once per fit. rho = 0 recovers the first
principal component; rho -> infinity recovers the first canonical direction
pair (for full-column-rank X). The returned v is scaled so that ||X v|| is
the leading eigenvalue lam1, and the equivalent unit-scale factorization is
(u, v/||v||, d = ||v||).

The sparse fit adds an L1 penalty on v (objective without the 1/2 factors):

    ||X - u v'||_F^2 + rho ||X1 v1 - X2 v2||_2^2 + lam ||v||_1,  ||u||_2 = 1,

and alternates (a) a lasso update of v against the augmented design
[I_p; sqrt(rho) X D] with response (X'u, 0), and (b) the closed-form update
u = Xv/||Xv||. Both half-steps are exact minimizations, so the objective is
non-increasing; an increase beyond slack raises MonotonicityError.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .data import concat
from .errors import (CocaError, ConvergenceError, DegenerateInputError,
                     MonotonicityError)
from .lasso import LassoProblem, solve_lasso
from .linalg import (_spd_factor, _spd_solve_factored, canonical_sign,
                     leading_eigenvector, leading_singular_triplet)

# below this width the penalized system is assembled and factorized once per
# fit; above it, each power step solves the system matrix-free by CG
P_DENSE_CAP = 2000

# agreement weight beyond which the wide-data caveat is worth a diagnostic
RHO_LARGE_WARN = 1e3


@dataclass
class SolverConfig:
    """Tolerances and iteration budgets shared by path and CV drivers."""

    dense_tol: float = 1e-8
    dense_max_iter: int = 5000
    sparse_tol: float = 1e-7
    sparse_max_iter: int = 500
    lasso_tol: float = 1e-9
    lasso_max_iter: int = 5000
    v_change_tol: float = 1e-6


@dataclass
class CocaModel:
    """A fitted rank-one component.

    ``v`` is the concatenated weight vector (``v1``/``v2`` are its per-view
    blocks), ``u`` the unit left factor, and ``d = ||v||`` the factor scale,
    so the unit-scale factorization of the training matrix is d * u * (v/d)'.
    For dense fits ``lambda1`` stores the leading eigenvalue (= ||X v||).
    ``objective_convention`` records whether the reported objective halves
    the quadratic terms ("half", dense) or not ("plain", sparse).
    """

    rho: float
    lam: float
    d: float
    u: np.ndarray
    v: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    scores1: np.ndarray
    scores2: np.ndarray
    converged: bool
    iterations: int
    objective: float
    objective_convention: str
    p1: int
    lambda1: float | None = None
    objective_history: list | None = None

    @property
    def all_zero(self):
        return not np.any(self.v)


def apply_view_sign(v, p1):
    """Multiply by D = diag(I_{p1}, -I_{p2}) without materializing it."""
    out = np.array(v, dtype=float, copy=True)
    out[..., p1:] *= -1.0
    return out


def _check_fit_inputs(data, rho):
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    x = concat(data)
    scale = max(1.0, float(np.abs(x).max()))
    if float(np.abs(x.mean(axis=0)).max()) > 1e-8 * scale:
        warnings.warn("views are not column-centered; fits assume centered data",
                      stacklevel=3)
    if rho >= RHO_LARGE_WARN and data.p >= data.n:
        warnings.warn(
            "large agreement weight with p >= n: the high-rho limit is not a "
            "well-defined canonical direction for rank-deficient data",
            stacklevel=3)
    return x


def _finalize_sign(u, v):
    s = canonical_sign(v)
    return s * u, s * v


def fit_dense(data, rho, tol=1e-8, max_iter=5000, seed=0, v0=None,
              p_dense_cap=P_DENSE_CAP):
    """Unpenalized (no L1) fit by power iteration on the penalized operator.

    Raises ConvergenceError if the power iteration exhausts ``max_iter`` and
    DegenerateInputError when the spectrum gives no usable leading direction.
    ``v0`` warm-starts the iteration (used along hyperparameter paths).
    """
    x = _check_fit_inputs(data, rho)
    n, p = x.shape
    p1 = data.p1

    if p <= p_dense_cap:
        g = x.T @ x
        g = 0.5 * (g + g.T)
        system = np.eye(p) + rho * apply_view_sign(apply_view_sign(g, p1).T, p1)
        factor = _spd_factor(system)

        def operator(w):
            return _spd_solve_factored(factor, g @ w)
    else:
        def system_matvec(z):
            dz = apply_view_sign(z, p1)
            return z + rho * apply_view_sign(x.T @ (x @ dz), p1)

        lin_op = LinearOperator((p, p), matvec=system_matvec, dtype=float)

        def operator(w):
            rhs = x.T @ (x @ w)
            z, info = cg(lin_op, rhs, rtol=1e-12, atol=0.0, maxiter=20 * p)
            if info != 0:
                raise ConvergenceError(
                    f"inner CG solve did not converge (info={info})",
                    last_iterate=z, iterations=info)
            return z

    try:
        w, lam1 = leading_eigenvector(operator, p, tol=tol, max_iter=max_iter,
                                      seed=seed, v0=v0)
    except ConvergenceError as err:
        err.args = (f"dense fit at rho={rho:g}: {err.args[0]}",)
        raise
    gram_scale = float(np.abs(x).max()) ** 2 * n
    if lam1 <= 1e-12 * max(1.0, gram_scale):
        raise DegenerateInputError(
            f"penalized spectrum is degenerate at rho={rho:g} "
            f"(leading eigenvalue {lam1:.3e})")

    xw = x @ w
    nxw = float(np.linalg.norm(xw))
    if nxw == 0:
        raise DegenerateInputError("leading direction lies in the null space of X")
    v = w * (lam1 / nxw)  # now ||X v|| = lam1
    u = xw / nxw
    u, v = _finalize_sign(u, v)
    v1, v2 = v[:p1], v[p1:]
    frob2 = float(np.einsum("ij,ij->", x, x))
    gap2 = float(np.sum((data.x1 @ v1 - data.x2 @ v2) ** 2))
    obj = 0.5 * (frob2 - 2.0 * lam1 + float(v @ v)) + 0.5 * rho * gap2
    return CocaModel(rho=float(rho), lam=0.0, d=float(np.linalg.norm(v)),
                     u=u, v=v, v1=v1, v2=v2,
                     scores1=data.x1 @ v1, scores2=data.x2 @ v2,
                     converged=True, iterations=max_iter, objective=obj,
                     objective_convention="half", p1=p1, lambda1=float(lam1))


def build_augmented(X, rho, u, p1, lam=0.0):
    """Augmented lasso problem whose quadratic part equals, up to a constant
    in v, the sparse objective at fixed u:

        ||y~ - X~ v||^2 = ||X'u - v||^2 + rho ||X1 v1 - X2 v2||^2

    with X~ = [I_p; sqrt(rho) X D] ((p+n) x p) and y~ = (X'u, 0_n).
    """
    X = np.asarray(X, dtype=float)
    u = np.asarray(u, dtype=float).ravel()
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    n, p = X.shape
    if u.shape != (n,):
        raise ValueError("u length does not match the row count of X")
    if abs(np.linalg.norm(u) - 1.0) > 1e-8:
        raise ValueError("u must be a unit vector")
    if not 1 <= p1 < p:
        raise ValueError("p1 must leave at least one column in each view")
    design = np.vstack([np.eye(p), np.sqrt(rho) * apply_view_sign(X, p1)])
    response = np.concatenate([X.T @ u, np.zeros(n)])
    return LassoProblem(design=design, response=response, lam=float(lam))


def fit_sparse(data, rho, lam, tol=1e-7, max_iter=500, seed=0, u0=None, v0=None,
               lasso_tol=1e-9, lasso_max_iter=5000, v_change_tol=1e-6):
    """Alternating lasso / normalized-projection solver for the sparse fit.

    Starts from the rho = 0 solution (leading left singular vector) unless
    ``u0`` is given. Stops when the relative objective change falls below
    ``tol`` and the relative change in v below ``v_change_tol``; returns the
    last iterate flagged ``converged=False`` on budget exhaustion. A v that
    collapses to all zeros (lam at or above the null threshold) is returned
    as a valid model with d = 0, not an error.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    x = _check_fit_inputs(data, rho)
    n, p = x.shape
    p1 = data.p1

    if u0 is not None:
        u = np.asarray(u0, dtype=float).ravel().copy()
        if u.shape != (n,) or np.linalg.norm(u) == 0:
            raise ValueError("u0 must be a nonzero vector of length n")
        u /= np.linalg.norm(u)
    else:
        u = leading_singular_triplet(x, tol=1e-8, seed=seed).u

    frob2 = float(np.einsum("ij,ij->", x, x))
    design = build_augmented(x, rho, u, p1, lam=lam).design
    v = (np.zeros(p) if v0 is None else np.asarray(v0, dtype=float).ravel().copy())
    if v.shape != (p,):
        raise ValueError("v0 has wrong length")

    def plain_objective(u_cur, v_cur):
        xv = x @ v_cur
        fit2 = frob2 - 2.0 * float(u_cur @ xv) + float(v_cur @ v_cur)
        gap = data.x1 @ v_cur[:p1] - data.x2 @ v_cur[p1:]
        return fit2 + rho * float(gap @ gap) + lam * float(np.abs(v_cur).sum())

    history = []
    converged = False
    iterations = 0
    for k in range(1, max_iter + 1):
        iterations = k
        response = np.concatenate([x.T @ u, np.zeros(n)])
        problem = LassoProblem(design=design, response=response, lam=lam)
        sol = solve_lasso(problem, tol=lasso_tol, max_iter=lasso_max_iter, warm=v)
        v_new = sol.beta
        if not np.any(v_new):
            return CocaModel(rho=float(rho), lam=float(lam), d=0.0, u=u,
                             v=np.zeros(p), v1=np.zeros(p1), v2=np.zeros(p - p1),
                             scores1=np.zeros(n), scores2=np.zeros(n),
                             converged=True, iterations=k, objective=frob2,
                             objective_convention="plain", p1=p1,
                             objective_history=history + [frob2])
        xv = x @ v_new
        nxv = float(np.linalg.norm(xv))
        if nxv == 0:
            raise DegenerateInputError("v update landed in the null space of X")
        u = xv / nxv
        obj = plain_objective(u, v_new)
        if history:
            slack = 1e-10 * max(1.0, abs(history[-1]))
            if obj > history[-1] + slack:
                raise MonotonicityError(
                    f"objective increased from {history[-1]:.12g} to {obj:.12g} "
                    f"at iteration {k}")
        v_prev, v = v, v_new
        history.append(obj)
        if len(history) >= 2:
            rel_obj = abs(history[-1] - history[-2]) / max(1.0, abs(history[-2]))
            rel_v = (float(np.linalg.norm(v - v_prev))
                     / max(float(np.linalg.norm(v_prev)), 1e-12))
            if rel_obj < tol and rel_v < v_change_tol:
                converged = True
                break

    u_fin, v_fin = _finalize_sign(u, v)
    v1, v2 = v_fin[:p1], v_fin[p1:]
    return CocaModel(rho=float(rho), lam=float(lam),
                     d=float(np.linalg.norm(v_fin)), u=u_fin, v=v_fin,
                     v1=v1, v2=v2, scores1=data.x1 @ v1, scores2=data.x2 @ v2,
                     converged=converged, iterations=iterations,
                     objective=history[-1], objective_convention="plain",
                     p1=p1, objective_history=history)


@dataclass
class PathCell:
    """One grid cell of a hyperparameter sweep; ``model`` is None on failure."""

    rho: float
    lam: float
    model: CocaModel | None
    agreement_gap: float
    variance: float
    sparsity: int
    failed: bool = False
    message: str = ""


@dataclass
class SolutionPath:
    cells: list = field(default_factory=list)

    def cell(self, rho, lam):
        for c in self.cells:
            if c.rho == rho and c.lam == lam:
                return c
        raise KeyError(f"no cell at rho={rho}, lam={lam}")


def _validate_grid(name, values):
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite and nonnegative")
    if np.any(np.diff(arr) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    return arr


def path_diagnostics(data, model):
    """(agreement gap at ||Xv|| = 1 scaling, explained variance, support size)."""
    if model.all_zero:
        return float("nan"), 0.0, 0
    xv = data.x1 @ model.v1 + data.x2 @ model.v2
    xv_norm = float(np.linalg.norm(xv))
    gap = float(np.linalg.norm(data.x1 @ model.v1 - data.x2 @ model.v2))
    if xv_norm == 0:
        return float("nan"), 0.0, int(np.count_nonzero(model.v))
    return gap / xv_norm, xv_norm ** 2, int(np.count_nonzero(model.v))


def solution_path(data, rho_grid, lambda_grid, warm_start=True, seed=0,
                  config=None):
    """Fit every (rho, lambda) grid cell, rho-major, optionally warm-started.

    lambda = 0 cells use the dense eigen solver; positive-lambda cells use the
    alternating sparse solver. Per-cell failures are recorded as flagged cells
    and do not abort the sweep.
    """
    cfg = config or SolverConfig()
    rhos = _validate_grid("rho_grid", rho_grid)
    lams = _validate_grid("lambda_grid", lambda_grid)
    cells = []
    warm_u, warm_v = None, None
    for rho in rhos:
        for lam in lams:
            try:
                if lam == 0.0:
                    model = fit_dense(data, rho, tol=cfg.dense_tol,
                                      max_iter=cfg.dense_max_iter, seed=seed,
                                      v0=warm_v if warm_start else None)
                else:
                    model = fit_sparse(
                        data, rho, lam, tol=cfg.sparse_tol,
                        max_iter=cfg.sparse_max_iter, seed=seed,
                        u0=warm_u if warm_start else None,
                        v0=warm_v if warm_start else None,
                        lasso_tol=cfg.lasso_tol,
                        lasso_max_iter=cfg.lasso_max_iter,
                        v_change_tol=cfg.v_change_tol)
            except CocaError as err:
                cells.append(PathCell(rho=float(rho), lam=float(lam), model=None,
                                      agreement_gap=float("nan"),
                                      variance=float("nan"), sparsity=0,
                                      failed=True, message=str(err)))
                continue
            gap, var, nnz = path_diagnostics(data, model)
            cells.append(PathCell(rho=float(rho), lam=float(lam), model=model,
                                  agreement_gap=gap, variance=var, sparsity=nnz))
            if warm_start and not model.all_zero:
                warm_u, warm_v = model.u, model.v
    return SolutionPath(cells=cells)
