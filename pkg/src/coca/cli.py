"""Batch command line: simulate, fit, path, cv, eval, predict.

Artifacts are staged to temporary files and renamed into place only after
the whole command has succeeded, so a failing run never leaves partial
outputs. Every JSON artifact embeds a ``provenance`` block (tool version,
argument echo, seed, wall-clock stamp); commands whose main artifact is CSV
also write a run-level ``provenance.json`` next to it. Reruns with the same
arguments produce byte-identical artifacts apart from the wall-clock stamp,
which lives only in provenance.

Exit codes: 0 success, 2 usage error, 3 data error, 4 convergence failure,
5 internal error. Errors print one machine-parsable line to stderr:
``coca: error[<kind>]: <message>``.

Grid syntax for ``--rho-grid`` / ``--lambda-grid``: a comma list such as
``0,0.5,2`` or a log-spaced range ``log:<start>:<stop>:<count>`` with
``start > 0``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np

from .baselines import cca_leading, pca_leading
from .data import (MultiViewData, concat, format_float, read_csv_view, split,
                   standardize, write_csv)
from .errors import (CocaError, ConvergenceError, DegenerateInputError,
                     MonotonicityError, ParseError, SingularMatrixError,
                     StratificationError)
from .metrics import (agreement_diagnostics, estimation_error,
                      excess_reconstruction_error, reconstruction_error)
from .model_selection import (HyperGrid, kfold_supervised, kfold_unsupervised,
                              lda_fit, lda_predict, auprc, auroc,
                              misclassification, speckled_cv)
from .solver import CocaModel, SolverConfig, fit_dense, fit_sparse, solution_path

SCHEMA_VERSION = 1


class _UsageError(Exception):
    pass


def parse_grid(text):
    """Comma list or log:start:stop:count; strictly increasing, nonnegative."""
    if text.startswith("log:"):
        parts = text.split(":")
        if len(parts) != 4:
            raise _UsageError(f"bad grid {text!r}; expected log:start:stop:count")
        try:
            start, stop, count = float(parts[1]), float(parts[2]), int(parts[3])
        except ValueError:
            raise _UsageError(f"bad grid {text!r}; non-numeric log range") from None
        if start <= 0 or stop <= start or count < 2:
            raise _UsageError(f"bad grid {text!r}; need 0 < start < stop, count >= 2")
        values = np.logspace(math.log10(start), math.log10(stop), count)
    else:
        try:
            values = np.array([float(t) for t in text.split(",")])
        except ValueError:
            raise _UsageError(f"bad grid {text!r}; non-numeric entry") from None
        if values.size == 0:
            raise _UsageError("empty grid")
    if np.any(~np.isfinite(values)) or np.any(values < 0):
        raise _UsageError(f"grid {text!r} must be finite and nonnegative")
    if np.any(np.diff(values) <= 0):
        raise _UsageError(f"grid {text!r} must be strictly increasing")
    return values


def _provenance(args):
    config = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    from . import __version__
    return {
        "tool": "coca",
        "version": __version__,
        "command": args.command,
        "config": config,
        "seed": getattr(args, "seed", None),
        "wallclock": datetime.now(timezone.utc).isoformat(),
    }


def _dump_json(doc):
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


class _Stager:
    """Collects artifacts, writes them to temp files, renames on commit."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.texts = []

    def add_text(self, name, text):
        self.texts.append((name, text))

    def add_csv(self, name, values, feature_names=None, sample_ids=None):
        lines = []
        if feature_names is not None:
            header = (["id"] if sample_ids is not None else []) + list(feature_names)
            lines.append(",".join(header))
        for i, row in enumerate(np.atleast_2d(values)):
            cells = [format_float(x) for x in row]
            if sample_ids is not None:
                cells.insert(0, str(sample_ids[i]))
            lines.append(",".join(cells))
        self.add_text(name, "\n".join(lines) + "\n")

    def commit(self):
        os.makedirs(self.out_dir, exist_ok=True)
        staged = []
        try:
            for name, text in self.texts:
                final = os.path.join(self.out_dir, name)
                tmp = final + f".tmp.{os.getpid()}"
                with open(tmp, "w", encoding="utf-8") as fh:
                    fh.write(text)
                staged.append((tmp, final))
        except BaseException:
            for tmp, _ in staged:
                try:
                    os.unlink(tmp)
                except OSError:
                    pass
            raise
        for tmp, final in staged:
            os.replace(tmp, final)
        return [final for _, final in staged]


def _read_views(args):
    v1 = read_csv_view(args.view1, has_header=args.header,
                       id_column=args.id_column)
    v2 = read_csv_view(args.view2, has_header=args.header,
                       id_column=args.id_column)
    return MultiViewData(v1.values, v2.values, sample_ids=v1.sample_ids,
                         feature_names1=v1.feature_names,
                         feature_names2=v2.feature_names)


def _read_labels(path):
    with open(path, encoding="utf-8") as fh:
        tokens = [line.strip() for line in fh if line.strip() != ""]
    if not tokens:
        raise ParseError(f"{path}: no labels found")
    try:
        values = [float(t) for t in tokens]
    except ValueError:
        return np.array(tokens)
    if all(v == int(v) for v in values):
        return np.array([int(v) for v in values])
    return np.array(values)


def _solver_config(args):
    cfg = SolverConfig()
    if getattr(args, "tol", None) is not None:
        cfg.dense_tol = args.tol
        cfg.sparse_tol = args.tol
    if getattr(args, "max_iter", None) is not None:
        cfg.dense_max_iter = args.max_iter
        cfg.sparse_max_iter = args.max_iter
    return cfg


def _float_list(arr):
    return [float(x) for x in np.asarray(arr).ravel()]


def model_to_dict(model):
    return {
        "rho": float(model.rho),
        "lambda": float(model.lam),
        "d": float(model.d),
        "u": _float_list(model.u),
        "v": _float_list(model.v),
        "v1": _float_list(model.v1),
        "v2": _float_list(model.v2),
        "scores1": _float_list(model.scores1),
        "scores2": _float_list(model.scores2),
        "converged": bool(model.converged),
        "iterations": int(model.iterations),
        "objective": float(model.objective),
        "objective_convention": model.objective_convention,
        "p1": int(model.p1),
        "lambda1": None if model.lambda1 is None else float(model.lambda1),
        "objective_history": (None if model.objective_history is None
                              else _float_list(model.objective_history)),
    }


def model_from_dict(block):
    return CocaModel(
        rho=float(block["rho"]), lam=float(block["lambda"]),
        d=float(block["d"]), u=np.asarray(block["u"], dtype=float),
        v=np.asarray(block["v"], dtype=float),
        v1=np.asarray(block["v1"], dtype=float),
        v2=np.asarray(block["v2"], dtype=float),
        scores1=np.asarray(block["scores1"], dtype=float),
        scores2=np.asarray(block["scores2"], dtype=float),
        converged=bool(block["converged"]),
        iterations=int(block["iterations"]),
        objective=float(block["objective"]),
        objective_convention=block["objective_convention"],
        p1=int(block["p1"]),
        lambda1=(None if block.get("lambda1") is None
                 else float(block["lambda1"])),
        objective_history=(None if block.get("objective_history") is None
                           else np.asarray(block["objective_history"],
                                           dtype=float)))


def _record_to_dict(record):
    return {"means": _float_list(record.means),
            "scales": _float_list(record.scales),
            "scaled": bool(record.scaled)}


def _apply_record_dict(rec, matrix):
    means = np.asarray(rec["means"], dtype=float)
    scales = np.asarray(rec["scales"], dtype=float)
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape[1] != means.size:
        raise DegenerateInputError(
            "data width does not match the model's training data")
    return (matrix - means) / scales


def _load_model_doc(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ParseError(f"unsupported model schema {doc.get('schema_version')!r}")
    return doc


def _require_component_model(doc):
    if doc.get("method") not in ("coca", "pca"):
        raise ParseError("this command needs a rank-one component model "
                         "(method coca or pca)")
    return model_from_dict(doc["model"])


# --------------------------------------------------------------------------
# subcommands


def cmd_simulate(args):
    from .simulate import draw, illustrative_spec, spec_from_json, spec_to_json

    if (args.preset is None) == (args.spec is None):
        raise _UsageError("give exactly one of --preset or --spec")
    if args.preset is not None:
        if args.preset != "illustrative":
            raise _UsageError(f"unknown preset {args.preset!r}")
        spec = illustrative_spec()
    else:
        with open(args.spec, encoding="utf-8") as fh:
            spec = spec_from_json(json.load(fh))
    if args.n < 2:
        raise _UsageError("--n must be at least 2")

    want_labels = args.labels_rule is not None
    if want_labels and args.labels_rule != "sign-z":
        raise _UsageError(f"unknown label rule {args.labels_rule!r}")
    if want_labels:
        data, latents = draw(spec, args.n, args.seed, return_latents=True)
    else:
        data = draw(spec, args.n, args.seed)

    prov = _provenance(args)
    stager = _Stager(args.out)
    stager.add_csv("view1.csv", data.x1)
    stager.add_csv("view2.csv", data.x2)
    truth = {
        "schema_version": SCHEMA_VERSION,
        "beta": _float_list(spec.beta),
        "n": int(args.n),
        "seed": int(args.seed),
        "spec": spec_to_json(spec),
        "provenance": prov,
    }
    stager.add_text("truth.json", _dump_json(truth))
    if want_labels:
        labels = (latents["z"] > 0).astype(int)
        stager.add_text("labels.csv", "\n".join(str(v) for v in labels) + "\n")
    stager.add_text("provenance.json", _dump_json(prov))
    stager.commit()


def _standardized(args, data):
    return standardize(data, scale=args.scale)


def cmd_fit(args):
    data = _read_views(args)
    work, record = _standardized(args, data)
    cfg = _solver_config(args)
    prov = _provenance(args)

    if args.method == "coca":
        if args.lam > 0:
            model = fit_sparse(work, args.rho, args.lam, tol=cfg.sparse_tol,
                               max_iter=cfg.sparse_max_iter, seed=args.seed,
                               lasso_tol=cfg.lasso_tol,
                               lasso_max_iter=cfg.lasso_max_iter,
                               v_change_tol=cfg.v_change_tol)
        else:
            model = fit_dense(work, args.rho, tol=cfg.dense_tol,
                              max_iter=cfg.dense_max_iter, seed=args.seed)
        block = model_to_dict(model)
    elif args.method == "pca":
        x = concat(work)
        v_unit, d = pca_leading(x, tol=cfg.dense_tol,
                                max_iter=cfg.dense_max_iter, seed=args.seed)
        v = d * v_unit
        u = x @ v_unit / d
        model = CocaModel(rho=0.0, lam=0.0, d=float(d), u=u, v=v,
                          v1=v[:work.p1], v2=v[work.p1:],
                          scores1=work.x1 @ v[:work.p1],
                          scores2=work.x2 @ v[work.p1:], converged=True,
                          iterations=0, objective=float(
                              np.einsum("ij,ij->", x, x) - d * d),
                          objective_convention="rank1-residual", p1=work.p1)
        block = model_to_dict(model)
    else:
        sol = cca_leading(work.x1, work.x2, ridge=args.ridge,
                          tol=cfg.dense_tol, max_iter=cfg.dense_max_iter,
                          seed=args.seed)
        block = {"w1": _float_list(sol.w1), "w2": _float_list(sol.w2),
                 "correlation": float(sol.correlation)}

    doc = {
        "schema_version": SCHEMA_VERSION,
        "method": args.method,
        "model": block,
        "standardization": _record_to_dict(record),
        "provenance": prov,
    }
    stager = _Stager(args.out)
    stager.add_text("model.json", _dump_json(doc))
    stager.commit()


def cmd_path(args):
    data = _read_views(args)
    work, _ = _standardized(args, data)
    cfg = _solver_config(args)
    rho_grid = parse_grid(args.rho_grid)
    lambda_grid = parse_grid(args.lambda_grid)
    prov = _provenance(args)

    path = solution_path(work, rho_grid, lambda_grid,
                         warm_start=not args.no_warm_start, seed=args.seed,
                         config=cfg)
    x = concat(work)
    header = ("rho,lambda,converged,objective,agreement_gap,"
              "score_correlation,sparsity,variance,reconstruction_error")
    rows = [header]
    for cell in path.cells:
        if cell.failed or cell.model is None:
            rows.append(",".join([format_float(cell.rho), format_float(cell.lam),
                                  "0", "", "", "", "", "", ""]))
            continue
        model = cell.model
        _, corr = agreement_diagnostics(work, model)
        recon = reconstruction_error(x, model, projection=False)
        rows.append(",".join([
            format_float(cell.rho), format_float(cell.lam),
            "1" if model.converged else "0",
            format_float(model.objective), format_float(cell.agreement_gap),
            format_float(corr), str(int(cell.sparsity)),
            format_float(cell.variance), format_float(recon)]))

    stager = _Stager(args.out)
    stager.add_text("path.csv", "\n".join(rows) + "\n")
    stager.add_text("provenance.json", _dump_json(prov))
    stager.commit()


def cmd_cv(args):
    data = _read_views(args)
    work, record = _standardized(args, data)
    cfg = _solver_config(args)
    grid = HyperGrid(parse_grid(args.rho_grid), parse_grid(args.lambda_grid))
    prov = _provenance(args)

    if args.cv_kind == "kfold":
        report = kfold_unsupervised(work, grid, n_folds=args.folds,
                                    solver_config=cfg, seed=args.seed,
                                    selection_rule=args.selection_rule)
    elif args.cv_kind == "speckled":
        report = speckled_cv(work, grid, fraction=args.speckle_frac,
                             solver_config=cfg, seed=args.seed,
                             selection_rule=args.selection_rule)
    else:
        if args.labels is None:
            raise _UsageError("supervised CV needs --labels")
        y = _read_labels(args.labels)
        report = kfold_supervised(work, y, grid, n_folds=args.folds,
                                  metric=args.metric, solver_config=cfg,
                                  seed=args.seed,
                                  selection_rule=args.selection_rule)

    rho, lam = report.selected_rho, report.selected_lambda
    if lam > 0:
        model = fit_sparse(work, rho, lam, tol=cfg.sparse_tol,
                           max_iter=cfg.sparse_max_iter, seed=args.seed,
                           lasso_tol=cfg.lasso_tol,
                           lasso_max_iter=cfg.lasso_max_iter,
                           v_change_tol=cfg.v_change_tol)
    else:
        model = fit_dense(work, rho, tol=cfg.dense_tol,
                          max_iter=cfg.dense_max_iter, seed=args.seed)

    report_doc = json.loads(report.to_json())
    report_doc["provenance"] = prov
    model_doc = {
        "schema_version": SCHEMA_VERSION,
        "method": "coca",
        "model": model_to_dict(model),
        "standardization": _record_to_dict(record),
        "provenance": prov,
    }
    stager = _Stager(args.out)
    stager.add_text("cv_report.json", _dump_json(report_doc))
    stager.add_text("model.json", _dump_json(model_doc))
    stager.commit()


def cmd_eval(args):
    doc = _load_model_doc(args.model)
    model = _require_component_model(doc)
    data = _read_views(args)
    x = _apply_record_dict(doc["standardization"], concat(data))
    if x.shape[1] != model.v.shape[0]:
        raise DegenerateInputError("data width does not match the model")
    x1, x2 = split(x, model.p1)
    work = MultiViewData(x1, x2)
    prov = _provenance(args)

    recon = reconstruction_error(x, model, projection=True)
    gap, corr = agreement_diagnostics(work, model)
    out = {
        "schema_version": SCHEMA_VERSION,
        "n": int(x.shape[0]),
        "reconstruction_error": recon,
        "reconstruction_error_per_sample": recon / x.shape[0],
        "agreement_gap": None if np.isnan(gap) else gap,
        "score_correlation": corr,
        "estimation_error": None,
        "excess_reconstruction_error": None,
        "provenance": prov,
    }
    if args.truth is not None:
        with open(args.truth, encoding="utf-8") as fh:
            truth = json.load(fh)
        beta = np.asarray(truth["beta"], dtype=float)
        if beta.size != model.v.size:
            raise DegenerateInputError(
                "truth vector length does not match the model")
        if not model.all_zero:
            out["estimation_error"] = estimation_error(model.v, beta)
            out["excess_reconstruction_error"] = excess_reconstruction_error(
                x, model.v, beta)

    stager = _Stager(args.out)
    stager.add_text("metrics.json", _dump_json(out))
    stager.commit()


def cmd_predict(args):
    doc = _load_model_doc(args.model)
    model = _require_component_model(doc)
    data = _read_views(args)
    x = _apply_record_dict(doc["standardization"], concat(data))
    x1, x2 = split(x, model.p1)
    y = _read_labels(args.labels)
    if y.shape[0] != x.shape[0]:
        raise DegenerateInputError("label count does not match the data")
    prov = _provenance(args)

    scores = np.column_stack([x1 @ model.v1, x2 @ model.v2])
    lda = lda_fit(scores, y, shrinkage=args.shrinkage)
    post = lda_predict(lda, scores)
    predicted = lda.classes[np.argmax(post, axis=1)]
    metrics = {"misclassification": misclassification(post, y, lda.classes)}
    if lda.classes.size == 2:
        metrics["auroc"] = auroc(post[:, 1], y)
        metrics["auprc"] = auprc(post[:, 1], y)

    out = {
        "schema_version": SCHEMA_VERSION,
        "classes": [c.item() if hasattr(c, "item") else c for c in lda.classes],
        "scores1": _float_list(scores[:, 0]),
        "scores2": _float_list(scores[:, 1]),
        "posteriors": [[float(p) for p in row] for row in post],
        "predicted": [p.item() if hasattr(p, "item") else p for p in predicted],
        "metrics": metrics,
        "shrinkage": float(args.shrinkage),
        "provenance": prov,
    }
    stager = _Stager(args.out)
    stager.add_text("predictions.json", _dump_json(out))
    stager.commit()


# --------------------------------------------------------------------------
# parser and dispatch


def _add_io_args(sp, views=True):
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--seed", type=int, default=0)
    if views:
        sp.add_argument("--view1", required=True)
        sp.add_argument("--view2", required=True)
        sp.add_argument("--header", action="store_true",
                        help="views carry a header row")
        sp.add_argument("--id-column", action="store_true",
                        help="first column is a sample id")


def _add_solver_args(sp):
    sp.add_argument("--scale", action="store_true",
                    help="scale columns to unit variance (centering is always on)")
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--max-iter", type=int, default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="coca",
        description="Cooperative component analysis: rank-one multi-view "
                    "fits between PCA and CCA, with sparse and CV tooling.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="draw data from the factor model")
    sp.add_argument("--preset", choices=["illustrative"], default=None)
    sp.add_argument("--spec", default=None, help="factor model spec JSON")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--labels-rule", default=None,
                    help="emit labels.csv; only rule: sign-z")
    _add_io_args(sp, views=False)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fit", help="fit one model")
    sp.add_argument("--method", choices=["coca", "pca", "cca"], default="coca")
    sp.add_argument("--rho", type=float, default=0.0)
    sp.add_argument("--lambda", dest="lam", type=float, default=0.0)
    sp.add_argument("--ridge", type=float, default=0.0,
                    help="gram ridge for --method cca")
    _add_io_args(sp)
    _add_solver_args(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("path", help="sweep a (rho, lambda) grid")
    sp.add_argument("--rho-grid", required=True)
    sp.add_argument("--lambda-grid", default="0")
    sp.add_argument("--no-warm-start", action="store_true")
    _add_io_args(sp)
    _add_solver_args(sp)
    sp.set_defaults(func=cmd_path)

    sp = sub.add_parser("cv", help="cross-validate over a grid, refit the pick")
    sp.add_argument("--cv-kind", choices=["kfold", "speckled", "supervised"],
                    default="kfold")
    sp.add_argument("--rho-grid", required=True)
    sp.add_argument("--lambda-grid", default="0")
    sp.add_argument("--folds", type=int, default=5)
    sp.add_argument("--speckle-frac", type=float, default=0.1)
    sp.add_argument("--metric", choices=["auroc", "auprc", "misclassification"],
                    default="auroc")
    sp.add_argument("--labels", default=None)
    sp.add_argument("--selection-rule", choices=["min", "1se"], default="min")
    _add_io_args(sp)
    _add_solver_args(sp)
    sp.set_defaults(func=cmd_cv)

    sp = sub.add_parser("eval", help="score held-out data under a model")
    sp.add_argument("--model", required=True, help="model.json from fit or cv")
    sp.add_argument("--truth", default=None, help="truth.json from simulate")
    _add_io_args(sp)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("predict", help="LDA on the model's view scores")
    sp.add_argument("--model", required=True)
    sp.add_argument("--labels", required=True)
    sp.add_argument("--shrinkage", type=float, default=0.1)
    _add_io_args(sp)
    sp.set_defaults(func=cmd_predict)

    return parser


def _fail(kind, code, message):
    line = " ".join(str(message).split())
    print(f"coca: error[{kind}]: {line}", file=sys.stderr)
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
        return 0
    except _UsageError as err:
        return _fail("usage", 2, err)
    except (ParseError, FileNotFoundError, IsADirectoryError, PermissionError,
            json.JSONDecodeError, DegenerateInputError, SingularMatrixError,
            StratificationError, ValueError, KeyError) as err:
        return _fail("data", 3, err)
    except (ConvergenceError, MonotonicityError) as err:
        return _fail("convergence", 4, err)
    except CocaError as err:
        return _fail("convergence", 4, err)
    except Exception as err:  # pragma: no cover - last-resort guard
        return _fail("internal", 5, f"{type(err).__name__}: {err}")


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
