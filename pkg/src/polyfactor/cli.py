"""Command-line front end: train, predict, eval, path, oracle-compare."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .data import DataError, SplitSpec, load_movielens, load_svmlight, make_dataset, split
from .gradients import GradientOperator
from .losses import MULTICLASS_LOSSES
from .mcrank import build_ordinal, evaluate_ranking, expected_relevance, fit_mcrank
from .models import accuracy, load_model, outputs, predict_class, save_model
from .refit import FistaConfig
from .selection import OracleLimitError, SelectConfig, compare_methods, f_value
from .solver import ConfigError, SolverConfig, fit, fit_path

SEP_CHOICES = {"tab": "\t", "::": "::"}
LOSS_CHOICES = ("logistic", "smoothed-hinge", "squared-hinge", "binary-logistic", "squared")


class UsageError(Exception):
    pass


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _add_data_flags(p):
    p.add_argument("--data", required=True, help="input data file")
    p.add_argument("--format", choices=("svmlight", "movielens"), default="svmlight")
    p.add_argument("--sep", choices=sorted(SEP_CHOICES), default="tab",
                   help="movielens field separator")
    p.add_argument("--augment-bias", choices=("auto", "on", "off"), default="auto",
                   help="prepend a constant-1 feature (auto: on for svmlight PN "
                        "multi-class, off otherwise)")


def _add_train_flags(p):
    p.add_argument("--model", choices=("pn", "fm"), default="pn")
    p.add_argument("--penalty", choices=("l1", "l1l2", "l1linf"), default="l1l2")
    p.add_argument("--lambda", dest="lam", type=float, default=1e-3)
    p.add_argument("--k-max", type=int, default=30)
    p.add_argument("--refit", choices=("output", "full"), default="output")
    p.add_argument("--loss", choices=LOSS_CHOICES, default=None,
                   help="default: logistic, or binary-logistic with --mcrank")
    p.add_argument("--mcrank", action="store_true",
                   help="train the ordinal multi-output reduction on ratings")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=0.01, help="power-method tolerance")
    p.add_argument("--stop-gap", type=float, default=1e-7)
    p.add_argument("--fista-max-iter", type=int, default=1000)
    p.add_argument("--fista-tol", type=float, default=1e-3)


def _resolve_loss(args) -> str:
    if args.mcrank:
        if args.loss not in (None, "binary-logistic"):
            raise UsageError(f"--mcrank trains binary threshold classifiers; "
                             f"--loss {args.loss} conflicts")
        if args.model != "fm":
            raise UsageError("--mcrank is wired for --model fm")
        return "binary-logistic"
    loss = args.loss or "logistic"
    if loss == "binary-logistic":
        raise UsageError("--loss binary-logistic needs --mcrank (it trains on "
                         "the ordinal threshold matrix)")
    return loss


def _resolve_augment(args, loss: str) -> bool:
    if args.format == "movielens":
        if args.augment_bias == "on":
            raise UsageError("--augment-bias on is not supported for one-hot "
                             "movielens rows")
        return False
    if args.augment_bias == "auto":
        return args.model == "pn" and loss in MULTICLASS_LOSSES
    return args.augment_bias == "on"


def _load(args, augment: bool):
    if args.format == "movielens":
        return load_movielens(args.data, sep=SEP_CHOICES[args.sep])
    return load_svmlight(args.data, augment_bias=augment)


def _solver_config(args, loss: str) -> SolverConfig:
    return SolverConfig(
        model=args.model, loss=loss, penalty=args.penalty, lam=args.lam,
        k_max=args.k_max, refit=args.refit,
        select=SelectConfig(eps=args.eps, seed=args.seed),
        fista=FistaConfig(max_iter=args.fista_max_iter, tol=args.fista_tol),
        stop_gap=args.stop_gap, seed=args.seed)


def _write_trace(path, trace, deterministic: bool) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "objective", "score", "k", "seconds"])
        for rec in trace:
            seconds = 0.0 if deterministic else rec.seconds
            writer.writerow([rec.t, repr(rec.objective), repr(rec.score),
                             rec.k, f"{seconds:.6f}"])


def _write_manifest(args, cfg: SolverConfig, augment: bool, artifacts: dict) -> None:
    manifest = {
        "command": args.command,
        "version": __version__,
        "config": {
            **asdict(cfg),
            "mcrank": bool(getattr(args, "mcrank", False)),
            "augment_bias": augment,
            "format": args.format,
            "sep": args.sep,
            "deterministic_trace": bool(getattr(args, "deterministic_trace", False)),
        },
        "data": {"path": args.data, "sha256": _sha256(args.data)},
        "seed": args.seed,
        "artifacts": artifacts,
    }
    path = artifacts["model"] + ".manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_train(args) -> int:
    loss = _resolve_loss(args)
    augment = _resolve_augment(args, loss)
    ds = _load(args, augment)
    cfg = _solver_config(args, loss)
    if args.mcrank:
        model, trace = fit_mcrank(build_ordinal(ds), cfg)
    else:
        model, trace = fit(ds, cfg)
    save_model(model, args.out)
    artifacts = {"model": args.out, "trace": args.trace}
    if args.trace:
        _write_trace(args.trace, trace, args.deterministic_trace)
    _write_manifest(args, cfg, augment, artifacts)
    print(f"final objective {trace[-1].objective:.6g} with k={model.k} basis vectors")
    return 0


def _check_dims(model, ds) -> None:
    if model.d != ds.d:
        raise RuntimeError(f"model expects d={model.d} features but the data "
                           f"has d={ds.d}")


def cmd_predict(args) -> int:
    model = load_model(args.model)
    augment = model.bias_augmented and args.format == "svmlight"
    ds = _load(args, augment)
    _check_dims(model, ds)
    out = sys.stdout if args.out == "-" else open(args.out, "w", encoding="utf-8")
    try:
        if model.loss == "binary-logistic":
            for v in expected_relevance(model, ds.X):
                out.write(f"{float(v)!r}\n")
        elif model.loss == "squared":
            for v in outputs(model, ds.X)[:, 0]:
                out.write(f"{float(v)!r}\n")
        else:
            label_map = model.label_map or tuple(range(1, model.m + 1))
            for c in predict_class(model, ds.X):
                out.write(f"{label_map[int(c) - 1]}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    augment = model.bias_augmented and args.format == "svmlight"
    ds = _load(args, augment)
    _check_dims(model, ds)
    if model.loss in ("binary-logistic", "squared"):
        ks = (1, 5) if ds.group_ids is not None else ()
        report = evaluate_ranking(model, ds, ks=ks)
        report.update({"k": model.k, "lambda": model.lam, "penalty": model.penalty,
                       "model_kind": model.kind})
    else:
        report = {"accuracy": accuracy(model, ds), "n": ds.n, "k": model.k,
                  "lambda": model.lam, "penalty": model.penalty,
                  "model_kind": model.kind}
    print(json.dumps(report, sort_keys=True))
    return 0


def _metric_fn(name: str):
    if name == "accuracy":
        return accuracy, True
    if name == "rmse":
        return (lambda model, ds: evaluate_ranking(model, ds, ks=())["rmse"]), False
    if name.startswith("ndcg@"):
        k = int(name.split("@", 1)[1])
        return (lambda model, ds: evaluate_ranking(model, ds, ks=(k,))[name]), True
    raise UsageError(f"unknown metric {name!r}")


def _auto_lambda_grid(ds, cfg: SolverConfig, points: int = 10):
    """Log grid anchored at the weight that zeroes the first selected atom."""
    from .gradients import GradientOperator
    from .losses import output_count
    from .models import empty_model
    from .penalties import dual_norm
    from .selection import select_l1

    m_out = output_count(cfg.loss, ds)
    model = empty_model(cfg.model, ds.d, m_out, cfg.loss, cfg.penalty, cfg.lam)
    op = GradientOperator(ds, cfg.model, n_outputs=m_out)
    op.refresh(model)
    sel = select_l1(op, cfg.select)
    top = dual_norm(cfg.penalty, sel.quad_values[None, :])
    if not np.isfinite(top) or top <= 0:
        raise UsageError("cannot derive a lambda grid from a zero gradient")
    return tuple(np.geomspace(top, top * 1e-3, points))


def cmd_path(args) -> int:
    loss = _resolve_loss(args)
    augment = _resolve_augment(args, loss)
    ds = _load(args, augment)
    try:
        fractions = [float(f) for f in args.split.split(",")]
        spec = SplitSpec(*fractions, seed=args.seed)
    except (TypeError, ValueError, DataError) as exc:
        raise UsageError(f"bad --split: {exc}") from None
    train_ds, valid_ds, _ = split(ds, spec)
    if args.mcrank:
        train_ds = build_ordinal(train_ds)
    if args.lambdas == "auto":
        lams = _auto_lambda_grid(train_ds, _solver_config(args, loss))
    else:
        lams = [float(v) for v in args.lambdas.split(",")]
    metric, higher = _metric_fn(args.metric)
    cfg = _solver_config(args, loss)
    model, report = fit_path(train_ds, valid_ds, cfg, lam_grid=lams,
                             metric_fn=metric, higher_is_better=higher)
    save_model(model, args.out)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(json.dumps(report["best"], sort_keys=True))
    return 0


def _random_instance(rng, n, d, m):
    X = rng.standard_normal((n, d))
    D = rng.standard_normal((n, m))
    ds = make_dataset(X, np.ones(n, dtype=np.int64), m)
    op = GradientOperator(ds, "pn", n_outputs=m)
    op.set_gradients(D)
    return op, ds


def cmd_oracle_compare(args) -> int:
    if args.m_max > args.oracle_limit:
        raise UsageError(f"exact selection is exponential in the output count; "
                         f"--m-max {args.m_max} exceeds --oracle-limit "
                         f"{args.oracle_limit}")
    rng = np.random.default_rng(args.seed)
    rows = []

    def run(tag, op, ds):
        cfg = SelectConfig(eps=args.eps, seed=args.seed)
        results = compare_methods(op, cfg, ds=ds, oracle_limit=args.oracle_limit)
        exact = results.pop("exact")
        denom = max(exact.score, 1e-300)
        rows.append((tag, "exact", exact.score, 1.0))
        for method, res in results.items():
            f1 = f_value(res.quad_values, 1)
            rows.append((tag, method, f1, f1 / denom))

    for i in range(args.instances):
        m = 2 + i % (args.m_max - 1)
        op, ds = _random_instance(rng, args.n, args.d, m)
        run(f"random-{i}", op, ds)

    if args.data:
        ds = _load(args, augment=False)
        if ds.d > 64:
            raise UsageError(f"dataset has d={ds.d}; the exact oracle needs a "
                             f"dense eigensolve (d <= 64)")
        if ds.m > args.oracle_limit:
            raise UsageError(f"dataset has m={ds.m} outputs; exact selection is "
                             f"exponential in m (limit {args.oracle_limit})")
        op = GradientOperator(ds, args.model, n_outputs=ds.m)
        from .losses import loss_gradients, targets_for
        O = np.zeros((ds.n, ds.m))
        op.set_gradients(loss_gradients("logistic", targets_for("logistic", ds), O))
        run("dataset", op, ds)

    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance", "method", "f1", "nu_hat"])
        for tag, method, f1, nu in rows:
            writer.writerow([tag, method, repr(float(f1)), repr(float(nu))])
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyfactor",
        description="Greedy conditional-gradient training of multi-output "
                    "polynomial networks and factorization machines")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit one model and save it as JSON")
    _add_data_flags(p)
    _add_train_flags(p)
    p.add_argument("--out", required=True, help="model JSON output path")
    p.add_argument("--trace", default=None, help="objective trace CSV path")
    p.add_argument("--deterministic-trace", action="store_true",
                   help="write 0.0 in the trace seconds column so that "
                        "re-runs are byte-identical")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="stream one prediction per input row")
    _add_data_flags(p)
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--out", default="-", help="output path (default stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="evaluate a saved model on a dataset")
    _add_data_flags(p)
    p.add_argument("--model", required=True, help="model JSON path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("path", help="regularization path with interleaved "
                                    "validation; saves the best model")
    _add_data_flags(p)
    _add_train_flags(p)
    p.add_argument("--lambdas", default="auto",
                   help="comma-separated, strictly decreasing lambda grid; "
                        "'auto' uses a 10-point log grid from the weight that "
                        "zeroes the first selected atom down to 1/1000 of it")
    p.add_argument("--split", default="0.5,0.25,0.25",
                   help="train,valid,test fractions")
    p.add_argument("--metric", default="accuracy",
                   help="accuracy, rmse, ndcg@1, ndcg@5, ...")
    p.add_argument("--out", required=True, help="best-model JSON path")
    p.add_argument("--report", default=None, help="per-lambda report JSON path")
    p.set_defaults(func=cmd_path)

    p = sub.add_parser("oracle-compare",
                       help="basis-selection method comparison CSV (empirical "
                            "approximation factors against the exact oracle)")
    p.add_argument("--data", default=None, help="optional dataset to include")
    p.add_argument("--format", choices=("svmlight", "movielens"), default="svmlight")
    p.add_argument("--sep", choices=sorted(SEP_CHOICES), default="tab")
    p.add_argument("--model", choices=("pn", "fm"), default="pn")
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--n", type=int, default=40, help="samples per random instance")
    p.add_argument("--d", type=int, default=12, help="features per random instance")
    p.add_argument("--m-max", type=int, default=8)
    p.add_argument("--oracle-limit", type=int, default=12)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=cmd_oracle_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, OracleLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
