"""Corrective refitting of the current model by accelerated proximal
gradient (FISTA) in penalized form, plus pruning of dead basis rows.

The convex step re-optimizes the output matrix V over the fixed activation
features; the optional non-convex step descends jointly in (V, H) with V
going through the penalty prox and H rows projected back onto the unit ball.
A function-value restart guard keeps every recorded objective trace
non-increasing.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .losses import loss_gradients, loss_values, targets_for
from .models import Model, hidden_activations, outputs
from .penalties import penalty_value, prox, project_unit_rows


@dataclass(frozen=True)
class FistaConfig:
    max_iter: int = 1000
    tol: float = 1e-3

    def __post_init__(self):
        if self.max_iter < 1 or self.tol <= 0:
            raise ValueError("max_iter and tol must be positive")


def penalized_objective(model: Model, ds) -> float:
    """Total training loss plus lam * Omega(V)."""
    O = outputs(model, ds.X)
    targets = targets_for(model.loss, ds)
    return float(loss_values(model.loss, targets, O).sum()) + \
        model.lam * penalty_value(model.penalty, model.V)


def _dot(xs, ys) -> float:
    return float(sum(np.vdot(x, y) for x, y in zip(xs, ys)))


def _combine(xs, a, ys):
    return tuple(x + a * y for x, y in zip(xs, ys))


def _fista(x0, smooth_value, smooth_grad, prox_step, nonsmooth_value, cfg: FistaConfig):
    """Monotone FISTA over a tuple of arrays; returns (x, objective trace)."""
    x = tuple(np.array(a) for a in x0)
    obj = smooth_value(x) + nonsmooth_value(x)
    trace = [obj]
    y = x
    t = 1.0
    L = 1.0
    for _ in range(cfg.max_iter):
        L = max(L * 0.5, 1e-10)
        restarted = False
        while True:
            fy = smooth_value(y)
            gy = smooth_grad(y)
            cand = None
            for _ in range(80):
                step = 1.0 / L
                cand = prox_step(_combine(y, -step, gy), step)
                diff = tuple(c - yy for c, yy in zip(cand, y))
                bound = fy + _dot(gy, diff) + 0.5 * L * _dot(diff, diff)
                if smooth_value(cand) <= bound + 1e-12 * max(abs(fy), 1.0):
                    break
                L *= 2.0
            cand_obj = smooth_value(cand) + nonsmooth_value(cand)
            if cand_obj <= obj + 1e-12 * max(abs(obj), 1.0) or restarted:
                break
            # momentum overshot: restart from the last accepted point
            y = x
            t = 1.0
            restarted = True
        if cand_obj > obj:
            cand, cand_obj = x, obj  # floating-point stall: keep the best point
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = _combine(cand, (t - 1.0) / t_next, tuple(c - xx for c, xx in zip(cand, x)))
        x, t = cand, t_next
        stop = abs(trace[-1] - cand_obj) < cfg.tol * max(abs(cand_obj), 1.0)
        obj = cand_obj
        trace.append(obj)
        if stop:
            break
    return x, trace


def refit_output(model: Model, ds, cfg: FistaConfig) -> tuple[Model, list[float]]:
    """Convex re-fit of V over the fixed basis (penalized, warm-started)."""
    if model.k == 0:
        return model, [penalized_objective(model, ds)]
    Phi = hidden_activations(model.kind, model.H, ds.X)
    targets = targets_for(model.loss, ds)
    lam = model.lam

    def smooth_value(x):
        return float(loss_values(model.loss, targets, Phi @ x[0]).sum())

    def smooth_grad(x):
        return (Phi.T @ loss_gradients(model.loss, targets, Phi @ x[0]),)

    def prox_step(x, step):
        return (prox(model.penalty, x[0], lam * step),)

    def nonsmooth_value(x):
        return lam * penalty_value(model.penalty, x[0])

    (V,), trace = _fista((model.V,), smooth_value, smooth_grad, prox_step,
                         nonsmooth_value, cfg)
    return replace(model, V=V), trace


def refit_full(model: Model, ds, cfg: FistaConfig) -> tuple[Model, list[float]]:
    """Joint proximal-gradient descent in (V, H); H rows stay in the unit ball."""
    if model.k == 0:
        return model, [penalized_objective(model, ds)]
    X = ds.X
    X2 = X.multiply(X).tocsr() if model.kind == "fm" else None
    targets = targets_for(model.loss, ds)
    lam = model.lam

    def smooth_value(x):
        V, H = x
        O = hidden_activations(model.kind, H, X) @ V
        return float(loss_values(model.loss, targets, O).sum())

    def smooth_grad(x):
        V, H = x
        Z = np.asarray(X @ H.T)
        if model.kind == "pn":
            Phi = Z * Z
        else:
            Phi = 0.5 * (Z * Z - np.asarray(X2 @ (H * H).T))
        G = loss_gradients(model.loss, targets, Phi @ V)
        gV = Phi.T @ G
        W = G @ V.T
        gH = np.asarray(X.T @ (Z * W)).T
        if model.kind == "fm":
            gH = gH - H * np.asarray(X2.T @ W).T
        else:
            gH = 2.0 * gH
        return gV, gH

    def prox_step(x, step):
        return prox(model.penalty, x[0], lam * step), project_unit_rows(x[1])

    def nonsmooth_value(x):
        return lam * penalty_value(model.penalty, x[0])

    (V, H), trace = _fista((model.V, model.H), smooth_value, smooth_grad,
                           prox_step, nonsmooth_value, cfg)
    return replace(model, V=V, H=H), trace


def prune(model: Model, tol_row: float = 1e-12) -> Model:
    """Drop basis rows whose output weights are (numerically) all zero."""
    if model.k == 0:
        return model
    keep = np.abs(model.V).max(axis=1) >= tol_row
    if keep.all():
        return model
    return replace(model, V=model.V[keep], H=model.H[keep])
