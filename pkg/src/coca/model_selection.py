"""Hyperparameter selection over a (rho, lambda) grid.

Three procedures produce a ``CvReport``:

* ``kfold_unsupervised``: seeded K folds; per cell, fit on each K-1-fold
  training split (centered per split) and score the held-out fold by the
  per-sample projection reconstruction error.
* ``speckled_cv``: mask a seeded random fraction of entries of the
  concatenated matrix (every row and column keeps at least one unmasked
  entry), impute masked entries with the column mean of the unmasked ones,
  fit each cell once on the imputed matrix, and score the mean squared error
  of the rank-one reconstruction on the masked entries only.
* ``kfold_supervised``: per cell, fit the component once on the full data,
  derive the two per-sample view scores, and cross-validate only the
  downstream classifier: a linear discriminant with shrinkage is trained on
  the out-of-fold scores and the chosen metric (AUROC, AUPRC, or
  misclassification rate) is evaluated on each held-out fold.

Selection takes the extremal mean over eligible cells (a cell with every
fold failed is ineligible); ties within 1e-12 prefer the largest lambda and
then the smallest rho. The optional one-standard-error rule instead picks,
among cells within one standard error of the best mean, the largest lambda
and then the smallest rho. Fold partitions and masks are drawn from the
Philox generator keyed by the seed, so reports are byte-identical across
reruns.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .data import MultiViewData, concat, split, standardize
from .errors import (CocaError, SingularMatrixError, StratificationError)
from .linalg import _spd_factor, _spd_solve_factored
from .metrics import reconstruction_error
from .solver import SolverConfig, fit_dense, fit_sparse

SCHEMA_VERSION = 1

# metric name -> True when larger is better
_METRIC_MAXIMIZE = {"reconstruction": False, "auroc": True, "auprc": True,
                    "misclassification": False}


@dataclass
class HyperGrid:
    """Strictly increasing, nonnegative rho and lambda grids."""

    rho_values: np.ndarray
    lambda_values: np.ndarray

    def __post_init__(self):
        for name in ("rho_values", "lambda_values"):
            arr = np.asarray(getattr(self, name), dtype=float).ravel()
            if arr.size == 0:
                raise ValueError(f"{name} is empty")
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise ValueError(f"{name} must be finite and nonnegative")
            if np.any(np.diff(arr) <= 0):
                raise ValueError(f"{name} must be strictly increasing")
            setattr(self, name, arr)

    @property
    def shape(self):
        return self.rho_values.size, self.lambda_values.size


def make_folds(n, n_folds, seed):
    """Seeded fold labels in {0..K-1}; fold sizes differ by at most one."""
    if not 2 <= n_folds <= n:
        raise ValueError("need 2 <= n_folds <= n")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    order = rng.permutation(n)
    labels = np.empty(n, dtype=int)
    labels[order] = np.arange(n) % n_folds
    return labels


def make_stratified_folds(y, n_folds, seed):
    """Seeded folds preserving class proportions (counts within one)."""
    y = np.asarray(y).ravel()
    if n_folds < 2:
        raise ValueError("need at least 2 folds")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    labels = np.empty(y.shape[0], dtype=int)
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        if idx.size < 2:
            raise StratificationError(
                f"class {cls!r} has fewer than 2 samples")
        order = rng.permutation(idx.size)
        labels[idx[order]] = np.arange(idx.size) % n_folds
    return labels


@dataclass
class SpeckleMask:
    """Masked cell positions of an n x p matrix, reproducible from the seed."""

    rows: np.ndarray
    cols: np.ndarray
    n: int
    p: int
    fraction: float
    seed: int

    def view_counts(self, p1):
        """Masked-cell counts falling in each view's column block."""
        first = int(np.count_nonzero(self.cols < p1))
        return first, int(self.cols.size - first)


def make_speckle_mask(n, p, fraction, seed, max_tries=200):
    """Uniform mask over the concatenated matrix with coverage guarantees.

    Every row and every column retains at least one unmasked entry; draws
    that violate this are redrawn from the same stream, so the mask is a
    deterministic function of (n, p, fraction, seed).
    """
    if not 0 < fraction < 1:
        raise ValueError("fraction must be in (0, 1)")
    m = int(round(fraction * n * p))
    if m < 1:
        raise ValueError("fraction masks no cells at this size")
    if m > n * p - max(n, p):
        raise ValueError("fraction too large to keep every row and column covered")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    for _ in range(max_tries):
        flat = rng.choice(n * p, size=m, replace=False)
        rows, cols = np.divmod(flat, p)
        if (np.bincount(rows, minlength=n).max() < p
                and np.bincount(cols, minlength=p).max() < n):
            order = np.argsort(flat)
            return SpeckleMask(rows=rows[order], cols=cols[order], n=n, p=p,
                               fraction=float(fraction), seed=int(seed))
    raise ValueError("could not draw a mask keeping every row and column covered")


def masked_mse(original, reconstruction, mask):
    """Mean squared error over the masked cells only."""
    diff = (np.asarray(original, dtype=float)[mask.rows, mask.cols]
            - np.asarray(reconstruction, dtype=float)[mask.rows, mask.cols])
    return float(np.mean(diff ** 2))


# --------------------------------------------------------------------------
# downstream classifier


@dataclass
class LdaModel:
    """Linear discriminant with a trace-scaled identity shrinkage target."""

    classes: np.ndarray
    means: np.ndarray
    priors: np.ndarray
    shrunk_cov: np.ndarray
    shrinkage: float


def lda_fit(scores, y, shrinkage=0.1):
    """Fit a linear discriminant on low-dimensional score vectors.

    The pooled within-class covariance S is shrunk to
    (1 - a) S + a (tr(S)/d) I. At shrinkage 0 a singular pooled covariance
    raises SingularMatrixError advising a positive shrinkage.
    """
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    if scores.ndim != 2:
        raise ValueError("scores must be a matrix")
    y = np.asarray(y).ravel()
    if y.shape[0] != scores.shape[0]:
        raise ValueError("scores and labels disagree on sample count")
    if not 0 <= shrinkage <= 1:
        raise ValueError("shrinkage must be in [0, 1]")
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("need at least 2 classes")
    n, d = scores.shape
    means = np.empty((classes.size, d))
    priors = np.empty(classes.size)
    pooled = np.zeros((d, d))
    for i, cls in enumerate(classes):
        block = scores[y == cls]
        if block.shape[0] < 2:
            raise ValueError(f"class {cls!r} has fewer than 2 samples")
        means[i] = block.mean(axis=0)
        priors[i] = block.shape[0] / n
        centered = block - means[i]
        pooled += centered.T @ centered
    pooled /= (n - classes.size)
    target = (np.trace(pooled) / d) * np.eye(d)
    shrunk = (1.0 - shrinkage) * pooled + shrinkage * target
    try:
        _spd_factor(shrunk)
    except SingularMatrixError as err:
        raise SingularMatrixError(
            "pooled covariance is singular; increase the shrinkage",
            pivot=err.pivot) from err
    return LdaModel(classes=classes, means=means, priors=priors,
                    shrunk_cov=shrunk, shrinkage=float(shrinkage))


def lda_predict(model, scores):
    """Posterior class probabilities, one row per sample."""
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    factor = _spd_factor(model.shrunk_cov)
    wm = _spd_solve_factored(factor, model.means.T)  # d x C
    disc = scores @ wm
    disc -= 0.5 * np.einsum("cd,dc->c", model.means, wm)
    disc += np.log(model.priors)
    disc -= disc.max(axis=1, keepdims=True)
    post = np.exp(disc)
    post /= post.sum(axis=1, keepdims=True)
    return post


def _binary_labels(labels):
    labels = np.asarray(labels).ravel()
    classes = np.unique(labels)
    if classes.size != 2:
        raise ValueError("need exactly two classes")
    pos = labels == classes[1]
    if pos.all() or not pos.any():
        raise ValueError("need both classes present")
    return pos


def auroc(scores, labels):
    """Probability a positive outranks a negative, ties counted half.

    Computed from average ranks, which equals (concordant + ties/2) /
    (n_pos * n_neg).
    """
    scores = np.asarray(scores, dtype=float).ravel()
    pos = _binary_labels(labels)
    if scores.shape[0] != pos.shape[0]:
        raise ValueError("scores and labels disagree on length")
    n_pos = int(pos.sum())
    n_neg = pos.size - n_pos
    ranks = rankdata(scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def auprc(scores, labels):
    """Step-interpolated area under the precision-recall sweep.

    Thresholds descend through distinct score values; tied scores enter as
    one block, so a constant score vector yields the prevalence.
    """
    scores = np.asarray(scores, dtype=float).ravel()
    pos = _binary_labels(labels)
    if scores.shape[0] != pos.shape[0]:
        raise ValueError("scores and labels disagree on length")
    order = np.argsort(-scores, kind="stable")
    s_sorted = scores[order]
    p_sorted = pos[order].astype(float)
    tp = np.cumsum(p_sorted)
    fp = np.cumsum(1.0 - p_sorted)
    # keep only the last index of each tied block
    last = np.r_[s_sorted[1:] != s_sorted[:-1], True]
    tp, fp = tp[last], fp[last]
    n_pos = tp[-1]
    recall = tp / n_pos
    precision = tp / (tp + fp)
    return float(np.sum(np.diff(np.r_[0.0, recall]) * precision))


def misclassification(posteriors, labels, classes):
    """Error rate of the argmax-posterior rule."""
    pred = classes[np.argmax(posteriors, axis=1)]
    return float(np.mean(pred != np.asarray(labels).ravel()))


# --------------------------------------------------------------------------
# reports and selection


@dataclass
class CvReport:
    """Per-cell summaries plus the selected cell and how it was chosen."""

    kind: str
    metric: str
    rho_values: np.ndarray
    lambda_values: np.ndarray
    mean: np.ndarray
    se: np.ndarray
    fail_count: np.ndarray
    n_folds: int
    seed: int
    selection_rule: str
    selected_rho: float
    selected_lambda: float
    selected_index: tuple
    fold_assignments: np.ndarray | None = None
    speckle_fraction: float | None = None
    mask_view_counts: tuple | None = None
    extras: dict = field(default_factory=dict)

    def to_json(self):
        def grid(a):
            return [[None if np.isnan(x) else float(x) for x in row] for row in a]

        doc = {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "metric": self.metric,
            "rho_values": [float(r) for r in self.rho_values],
            "lambda_values": [float(l) for l in self.lambda_values],
            "mean": grid(self.mean),
            "se": grid(self.se),
            "fail_count": [[int(c) for c in row] for row in self.fail_count],
            "n_folds": int(self.n_folds),
            "seed": int(self.seed),
            "selection_rule": self.selection_rule,
            "selected_rho": float(self.selected_rho),
            "selected_lambda": float(self.selected_lambda),
            "selected_index": [int(i) for i in self.selected_index],
            "fold_assignments": (None if self.fold_assignments is None
                                 else [int(f) for f in self.fold_assignments]),
            "speckle_fraction": self.speckle_fraction,
            "mask_view_counts": (None if self.mask_view_counts is None
                                 else [int(c) for c in self.mask_view_counts]),
            "extras": self.extras,
        }
        return json.dumps(doc, indent=2, allow_nan=False)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {doc.get('schema_version')}")

        def grid(rows):
            return np.array([[np.nan if x is None else float(x) for x in row]
                             for row in rows], dtype=float)

        return cls(kind=doc["kind"], metric=doc["metric"],
                   rho_values=np.asarray(doc["rho_values"], dtype=float),
                   lambda_values=np.asarray(doc["lambda_values"], dtype=float),
                   mean=grid(doc["mean"]), se=grid(doc["se"]),
                   fail_count=np.asarray(doc["fail_count"], dtype=int),
                   n_folds=int(doc["n_folds"]), seed=int(doc["seed"]),
                   selection_rule=doc["selection_rule"],
                   selected_rho=float(doc["selected_rho"]),
                   selected_lambda=float(doc["selected_lambda"]),
                   selected_index=tuple(doc["selected_index"]),
                   fold_assignments=(None if doc["fold_assignments"] is None
                                     else np.asarray(doc["fold_assignments"],
                                                     dtype=int)),
                   speckle_fraction=doc["speckle_fraction"],
                   mask_view_counts=(None if doc["mask_view_counts"] is None
                                     else tuple(doc["mask_view_counts"])),
                   extras=doc.get("extras", {}))


def select_cell(mean, maximize, rule="min", se=None):
    """Pick (row, col) into the grid; see module docstring for tie rules."""
    mean = np.asarray(mean, dtype=float)
    eligible = ~np.isnan(mean)
    if not eligible.any():
        raise CocaError("every grid cell failed; nothing to select")
    work = np.where(eligible, mean, -np.inf if maximize else np.inf)
    best = work.max() if maximize else work.min()
    if rule == "min":
        cand = eligible & (np.abs(mean - best) <= 1e-12)
    elif rule == "1se":
        if se is None:
            raise ValueError("the one-standard-error rule needs per-cell se")
        bi = np.unravel_index(np.argmax(work) if maximize else np.argmin(work),
                              work.shape)
        margin = se[bi]
        if np.isnan(margin):
            margin = 0.0
        cand = eligible & (mean >= best - margin if maximize
                           else mean <= best + margin)
    else:
        raise ValueError(f"unknown selection rule {rule!r}")
    rows, cols = np.nonzero(cand)
    # prefer the largest lambda, then the smallest rho
    order = np.lexsort((rows, -cols))
    r, c = int(rows[order[0]]), int(cols[order[0]])
    return r, c


def _fit_cell(data, rho, lam, config, seed):
    if lam == 0.0:
        return fit_dense(data, rho, tol=config.dense_tol,
                         max_iter=config.dense_max_iter, seed=seed)
    return fit_sparse(data, rho, lam, tol=config.sparse_tol,
                      max_iter=config.sparse_max_iter, seed=seed,
                      lasso_tol=config.lasso_tol,
                      lasso_max_iter=config.lasso_max_iter,
                      v_change_tol=config.v_change_tol)


def _summarize(values):
    """Mean and standard error over the successful folds of one cell."""
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        return np.nan, np.nan
    if vals.size == 1:
        return float(vals[0]), np.nan
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(vals.size))


def kfold_unsupervised(data, grid, n_folds=5, solver_config=None, seed=0,
                       selection_rule="min"):
    """K-fold reconstruction cross-validation over the grid."""
    cfg = solver_config or SolverConfig()
    folds = make_folds(data.n, n_folds, seed)
    x = concat(data)
    shape = grid.shape
    mean = np.full(shape, np.nan)
    se = np.full(shape, np.nan)
    fails = np.zeros(shape, dtype=int)

    splits = []
    for k in range(n_folds):
        train_idx = np.flatnonzero(folds != k)
        test_idx = np.flatnonzero(folds == k)
        train = MultiViewData(data.x1[train_idx], data.x2[train_idx])
        train_c, record = standardize(train, scale=False)
        heldout_c = record.apply(x[test_idx])
        splits.append((train_c, heldout_c))

    for i, rho in enumerate(grid.rho_values):
        for j, lam in enumerate(grid.lambda_values):
            errors = []
            for train_c, heldout_c in splits:
                try:
                    with warnings.catch_warnings():
                        # wide folds trip the high-rho caveat on every fit
                        warnings.simplefilter("ignore", UserWarning)
                        model = _fit_cell(train_c, rho, lam, cfg, seed)
                except CocaError:
                    fails[i, j] += 1
                    continue
                if not model.converged:
                    fails[i, j] += 1
                    continue
                err = reconstruction_error(heldout_c, model, projection=True)
                errors.append(err / heldout_c.shape[0])
            mean[i, j], se[i, j] = _summarize(errors)

    r, c = select_cell(mean, maximize=False, rule=selection_rule, se=se)
    return CvReport(kind="kfold_unsupervised", metric="reconstruction",
                    rho_values=grid.rho_values, lambda_values=grid.lambda_values,
                    mean=mean, se=se, fail_count=fails, n_folds=n_folds,
                    seed=int(seed), selection_rule=selection_rule,
                    selected_rho=float(grid.rho_values[r]),
                    selected_lambda=float(grid.lambda_values[c]),
                    selected_index=(r, c), fold_assignments=folds)


def speckled_cv(data, grid, fraction=0.1, solver_config=None, seed=0,
                selection_rule="min"):
    """Masked-entry cross-validation: one fit per cell on the imputed matrix.

    The input is used as given (no internal centering): the reconstruction
    is compared to the original entries, so the caller should center first
    as elsewhere in the pipeline.
    """
    cfg = solver_config or SolverConfig()
    x = concat(data)
    n, p = x.shape
    mask = make_speckle_mask(n, p, fraction, seed)

    imputed = x.copy()
    keep = np.ones_like(x, dtype=bool)
    keep[mask.rows, mask.cols] = False
    col_means = np.where(keep, x, 0.0).sum(axis=0) / keep.sum(axis=0)
    imputed[mask.rows, mask.cols] = col_means[mask.cols]
    x1_imp, x2_imp = split(imputed, data.p1)
    data_imp = MultiViewData(x1_imp, x2_imp)

    shape = grid.shape
    mean = np.full(shape, np.nan)
    se = np.full(shape, np.nan)
    fails = np.zeros(shape, dtype=int)
    for i, rho in enumerate(grid.rho_values):
        for j, lam in enumerate(grid.lambda_values):
            try:
                with warnings.catch_warnings():
                    # imputation shifts column means slightly off zero
                    warnings.simplefilter("ignore", UserWarning)
                    model = _fit_cell(data_imp, rho, lam, cfg, seed)
            except CocaError:
                fails[i, j] += 1
                continue
            if not model.converged:
                fails[i, j] += 1
                continue
            recon = np.outer(model.u, model.v)
            mean[i, j] = masked_mse(x, recon, mask)

    r, c = select_cell(mean, maximize=False, rule=selection_rule, se=se)
    return CvReport(kind="speckled", metric="reconstruction",
                    rho_values=grid.rho_values, lambda_values=grid.lambda_values,
                    mean=mean, se=se, fail_count=fails, n_folds=1,
                    seed=int(seed), selection_rule=selection_rule,
                    selected_rho=float(grid.rho_values[r]),
                    selected_lambda=float(grid.lambda_values[c]),
                    selected_index=(r, c), speckle_fraction=float(fraction),
                    mask_view_counts=mask.view_counts(data.p1))


def kfold_supervised(data, y, grid, n_folds=5, metric="auroc",
                     solver_config=None, seed=0, shrinkage=0.1,
                     selection_rule="min"):
    """Cross-validate the classifier stage on per-cell component scores.

    The component is fit once per cell on the full (centered) data; only the
    discriminant trained on the two view scores is cross-validated. Binary
    ranking metrics require each fold to contain both classes.
    """
    if metric not in _METRIC_MAXIMIZE:
        raise ValueError(f"unknown metric {metric!r}")
    maximize = _METRIC_MAXIMIZE[metric]
    cfg = solver_config or SolverConfig()
    y = np.asarray(y).ravel()
    if y.shape[0] != data.n:
        raise ValueError("labels do not match the sample count")
    classes = np.unique(y)
    if metric in ("auroc", "auprc") and classes.size != 2:
        raise ValueError(f"{metric} requires binary labels")

    folds = make_stratified_folds(y, n_folds, seed)
    for k in range(n_folds):
        for cls in classes:
            n_train = int(np.count_nonzero((folds != k) & (y == cls)))
            if n_train < 2:
                raise StratificationError(
                    f"class {cls!r} has {n_train} training sample(s) in fold "
                    f"{k}; need at least 2")
            if metric in ("auroc", "auprc"):
                if not np.any((folds == k) & (y == cls)):
                    raise StratificationError(
                        f"class {cls!r} is absent from held-out fold {k}")

    centered, _ = standardize(data, scale=False)
    shape = grid.shape
    mean = np.full(shape, np.nan)
    se = np.full(shape, np.nan)
    fails = np.zeros(shape, dtype=int)
    for i, rho in enumerate(grid.rho_values):
        for j, lam in enumerate(grid.lambda_values):
            try:
                model = _fit_cell(centered, rho, lam, cfg, seed)
            except CocaError:
                fails[i, j] += n_folds
                continue
            if not model.converged or model.all_zero:
                fails[i, j] += n_folds
                continue
            scores = np.column_stack([centered.x1 @ model.v1,
                                      centered.x2 @ model.v2])
            vals = []
            for k in range(n_folds):
                tr = folds != k
                te = ~tr
                try:
                    lda = lda_fit(scores[tr], y[tr], shrinkage=shrinkage)
                    post = lda_predict(lda, scores[te])
                except (CocaError, ValueError):
                    fails[i, j] += 1
                    continue
                if metric == "misclassification":
                    vals.append(misclassification(post, y[te], lda.classes))
                else:
                    pos_score = post[:, 1]
                    fn = auroc if metric == "auroc" else auprc
                    vals.append(fn(pos_score, y[te]))
            mean[i, j], se[i, j] = _summarize(vals)

    r, c = select_cell(mean, maximize=maximize, rule=selection_rule, se=se)
    return CvReport(kind="kfold_supervised", metric=metric,
                    rho_values=grid.rho_values, lambda_values=grid.lambda_values,
                    mean=mean, se=se, fail_count=fails, n_folds=n_folds,
                    seed=int(seed), selection_rule=selection_rule,
                    selected_rho=float(grid.rho_values[r]),
                    selected_lambda=float(grid.lambda_values[c]),
                    selected_index=(r, c), fold_assignments=folds)
