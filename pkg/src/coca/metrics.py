"""Evaluation metrics for fitted components.

``estimation_error`` is the squared distance between unit-normalized weight
vectors minimized over the sign flip, so it lives in [0, 4] and equals 2 for
orthogonal directions. ``excess_reconstruction_error`` compares the per-row
projection residual of an estimate against that of the planted direction on
held-out rows. ``reconstruction_error`` scores a fitted model either in its
training parameterization (rank-one matrix u v') or, for rows the model has
never seen, as the projection residual onto the unit direction v/||v||.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError


def _unit(v, name):
    v = np.asarray(v, dtype=float).ravel()
    nv = np.linalg.norm(v)
    if nv == 0:
        raise DegenerateInputError(f"{name} is the zero vector")
    return v / nv


def estimation_error(v_hat, v_true):
    """min over sign of || v_hat/||v_hat|| -/+ v_true/||v_true|| ||^2."""
    a = _unit(v_hat, "v_hat")
    b = _unit(v_true, "v_true")
    return float(2.0 - 2.0 * abs(a @ b))


def excess_reconstruction_error(x_test, v_hat, v_true):
    """(1/n) ||X (I - vv')||_F^2 at v_hat minus the same at v_true.

    Both directions are unit-normalized internally; the result is >= 0 in
    expectation when v_true is the population-optimal direction but can be
    negative on a finite sample.
    """
    x = np.asarray(x_test, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("x_test must be a nonempty matrix")
    a = _unit(v_hat, "v_hat")
    b = _unit(v_true, "v_true")
    n = x.shape[0]
    res_hat = x - np.outer(x @ a, a)
    res_true = x - np.outer(x @ b, b)
    return float((np.einsum("ij,ij->", res_hat, res_hat)
                  - np.einsum("ij,ij->", res_true, res_true)) / n)


def reconstruction_error(x, model, projection=None):
    """Squared Frobenius residual of ``x`` under the fitted component.

    ``projection=None`` infers the parameterization: rows matching the
    model's training row count use the trained rank-one matrix u v', any
    other row count uses the projection form ||X - X vv'||_F^2 with the
    unit-normalized v. Pass an explicit boolean whenever the row counts may
    coincide by accident. An all-zero model reconstructs the zero matrix, so
    its error is ||X||_F^2 in both forms.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError("x must be a matrix")
    if x.shape[1] != model.v.shape[0]:
        raise ValueError("column count does not match the model")
    if model.all_zero:
        return float(np.einsum("ij,ij->", x, x))
    if projection is None:
        projection = x.shape[0] != model.u.shape[0]
    if projection:
        v = model.v / np.linalg.norm(model.v)
        resid = x - np.outer(x @ v, v)
    else:
        resid = x - np.outer(model.u, model.v)
    return float(np.einsum("ij,ij->", resid, resid))


def agreement_diagnostics(data, model):
    """(cross-view score gap at ||Xv|| = 1 scaling, score correlation).

    The correlation is the Pearson correlation of the two per-view score
    vectors, defined as 0 when either is constant. For an all-zero model the
    gap is reported as nan.
    """
    if model.all_zero:
        return float("nan"), 0.0
    s1 = data.x1 @ model.v1
    s2 = data.x2 @ model.v2
    total = float(np.linalg.norm(s1 + s2))
    if total == 0:
        return float("nan"), 0.0
    gap = float(np.linalg.norm(s1 - s2)) / total
    if s1.std() == 0 or s2.std() == 0:
        corr = 0.0
    else:
        corr = float(np.corrcoef(s1, s2)[0, 1])
    return gap, corr


@dataclass
class EvalReport:
    """Metric bundle produced by the evaluation pipeline."""

    reconstruction_error: float
    agreement_gap: float
    score_correlation: float
    estimation_error: float | None = None
    excess_reconstruction_error: float | None = None
