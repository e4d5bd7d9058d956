"""Outer greedy loop: select a basis vector, append it with zero output
weights, refit correctively, prune, and track the penalized objective.
A path driver fits one model per regularization weight with interleaved
validation and returns the best (lambda, iteration) pair.
"""

from __future__ import annotations

import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset
from .gradients import GradientOperator
from .losses import LOSSES, output_count
from .models import MODEL_KINDS, Model, accuracy, check_model, copy_model, empty_model
from .penalties import PENALTIES
from .refit import FistaConfig, penalized_objective, prune, refit_full, refit_output
from .selection import SelectConfig, select_group, select_l1

DUPLICATE_COS = 1.0 - 1e-8


class ConfigError(ValueError):
    """Inconsistent solver configuration."""


@dataclass(frozen=True)
class SolverConfig:
    model: str = "pn"
    loss: str = "logistic"
    penalty: str = "l1l2"
    lam: float = 1e-3
    k_max: int = 30
    refit: str = "output"
    select: SelectConfig = field(default_factory=SelectConfig)
    fista: FistaConfig = field(default_factory=FistaConfig)
    stop_gap: float = 1e-7
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.model!r}")
        if self.loss not in LOSSES:
            raise ConfigError(f"unknown loss {self.loss!r}")
        if self.penalty not in PENALTIES:
            raise ConfigError(f"unknown penalty {self.penalty!r}")
        if self.refit not in ("output", "full"):
            raise ConfigError(f"refit must be 'output' or 'full', got {self.refit!r}")
        if self.k_max < 1:
            raise ConfigError("k_max must be at least 1")
        if self.lam <= 0:
            raise ConfigError("lam must be positive")


@dataclass
class TraceRecord:
    t: int
    objective: float
    score: float
    k: int
    seconds: float


def _select(op: GradientOperator, cfg: SolverConfig):
    select_cfg = replace(cfg.select, seed=cfg.seed)
    if cfg.penalty == "l1":
        return select_l1(op, select_cfg)
    return select_group(op, 2 if cfg.penalty == "l1l2" else 1, select_cfg)


def fit(ds: Dataset, cfg: SolverConfig, iteration_hook=None) -> tuple[Model, list[TraceRecord]]:
    """Greedy conditional-gradient training on one dataset.

    Per iteration: refresh the gradient operator, select the best basis
    vector for the penalty's route, append it with a zero output row, refit
    (output layer, optionally the full model), prune dead rows and record
    the penalized objective. Stops early when no selection scores above
    ``stop_gap``. ``iteration_hook(t, model)``, when given, sees the pruned
    model after every iteration.
    """
    if ds.n < 1:
        raise ConfigError("cannot train on an empty dataset")
    m_out = output_count(cfg.loss, ds)
    model = empty_model(cfg.model, ds.d, m_out, cfg.loss, cfg.penalty, cfg.lam,
                        label_map=ds.label_map, bias_augmented=ds.bias_augmented)
    op = GradientOperator(ds, cfg.model, n_outputs=m_out)

    start = time.perf_counter()
    trace = [TraceRecord(t=0, objective=penalized_objective(model, ds), score=np.inf,
                         k=0, seconds=0.0)]
    for t in range(1, cfg.k_max + 1):
        op.refresh(model)
        sel = _select(op, cfg)
        if sel.degenerate:
            if t == 1:
                warnings.warn("zero gradient operator at the first iteration; "
                              "returning the empty model")
            break
        if sel.score <= cfg.stop_gap:
            break

        appended = True
        if model.k:
            overlaps = np.abs(model.H @ sel.h)
            norms = np.linalg.norm(model.H, axis=1) * np.linalg.norm(sel.h)
            if np.any(overlaps >= DUPLICATE_COS * np.maximum(norms, 1e-300)):
                appended = False  # near-duplicate atom: rely on refit alone
        if appended:
            model = replace(model,
                            H=np.vstack([model.H, sel.h[None, :]]),
                            V=np.vstack([model.V, np.zeros((1, m_out))]))

        model, _ = refit_output(model, ds, cfg.fista)
        if cfg.refit == "full":
            model, _ = refit_full(model, ds, cfg.fista)
        model = prune(model)

        objective = penalized_objective(model, ds)
        trace.append(TraceRecord(t=t, objective=objective, score=sel.score,
                                 k=model.k, seconds=time.perf_counter() - start))
        if iteration_hook is not None:
            iteration_hook(t, model)
        if not appended and objective >= trace[-2].objective - 1e-12 * max(abs(objective), 1.0):
            break  # duplicate atom and no refit progress: nothing left to add

    check_model(model)
    support_check(model, ds, iterations=trace[-1].t)
    return model, trace


def support_check(model: Model, ds: Dataset, iterations: int) -> dict:
    """Row-support sanity report: k <= iterations is a hard invariant; the
    comparison against the theoretical support bound is informational."""
    if model.k > iterations:
        raise RuntimeError(f"model has {model.k} basis rows after only "
                           f"{iterations} iterations")
    bound = ds.n * model.m + 1
    if model.penalty == "l1":
        bound = min(bound, ds.d * model.m)
    return {"k": model.k, "iterations": iterations, "support_bound": bound,
            "within_bound": model.k <= bound}


def _max_workers() -> int:
    try:
        return max(1, int(os.environ.get("POLYFACTOR_THREADS", "1")))
    except ValueError:
        return 1


def fit_path(train: Dataset, valid: Dataset, cfg: SolverConfig, lam_grid=None,
             metric_fn=None, higher_is_better: bool = True):
    """Fit one model per regularization weight, validating after every
    iteration, and return the best (lambda, iteration) model plus a report.

    ``metric_fn(model, dataset) -> float`` defaults to classification
    accuracy. Lambda values run independently (thread count capped by the
    POLYFACTOR_THREADS environment variable).
    """
    lams = tuple(float(l) for l in lam_grid) if lam_grid is not None else (cfg.lam,)
    if not lams:
        raise ConfigError("empty lambda grid")
    if len(lams) > 1 and any(b >= a for a, b in zip(lams, lams[1:])):
        raise ConfigError("lambda grid must be strictly decreasing")
    if metric_fn is None:
        metric_fn = accuracy

    def run_one(lam):
        snaps = []

        def hook(t, model):
            snaps.append((t, copy_model(model), float(metric_fn(model, valid))))

        model, trace = fit(train, replace(cfg, lam=lam), iteration_hook=hook)
        return snaps, trace

    workers = min(_max_workers(), len(lams))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(run_one, lams))
    else:
        runs = [run_one(lam) for lam in lams]

    sign = 1.0 if higher_is_better else -1.0
    best = None  # (signed metric, lam, t, model)
    report = []
    for lam, (snaps, trace) in zip(lams, runs):
        entries = [{"t": t, "k": model.k, "metric": metric} for t, model, metric in snaps]
        report.append({"lambda": lam, "iterations": entries})
        for t, model, metric in snaps:
            if best is None or sign * metric > best[0]:
                best = (sign * metric, lam, t, model)
    if best is None:
        raise ConfigError("no model was produced on any lambda (degenerate data?)")
    signed_metric, lam, t, model = best
    for entry in report:
        entry["selected"] = bool(entry["lambda"] == lam)
    return model, {"best": {"lambda": lam, "t": t, "metric": sign * signed_metric,
                            "k": model.k},
                   "per_lambda": report}
