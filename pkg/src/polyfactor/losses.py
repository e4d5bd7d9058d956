"""Convex multi-output losses and their output-gradients.

All multi-class losses share the pattern grad = sum_{c != y} rho_c (e_c - e_y)
for a per-class weight rho_c, so every gradient sums to zero. The
"binary-logistic" loss treats the m outputs as independent binary problems
against a {-1,+1} label matrix; "squared" is plain single-output regression.
"""

from __future__ import annotations

import numpy as np

MULTICLASS_LOSSES = ("logistic", "smoothed-hinge", "squared-hinge")
LOSSES = MULTICLASS_LOSSES + ("binary-logistic", "squared")


def _check_kind(kind: str) -> None:
    if kind not in LOSSES:
        raise ValueError(f"unknown loss {kind!r}; expected one of {LOSSES}")


def _class_margins(kind, y, O):
    """Per-sample shifted scores z with z[:, y] = 0 (hinge adds the unit bump)."""
    n = O.shape[0]
    oy = O[np.arange(n), y - 1]
    Z = O - oy[:, None]
    if kind in ("smoothed-hinge", "squared-hinge"):
        Z = Z + 1.0
        Z[np.arange(n), y - 1] = 0.0
    return Z


def _softmax_rows(Z):
    E = np.exp(Z - Z.max(axis=1, keepdims=True))
    return E / E.sum(axis=1, keepdims=True)


def loss_values(kind: str, labels, O: np.ndarray) -> np.ndarray:
    """Per-sample loss values for an n x m output matrix.

    ``labels`` is an int vector of class indices in 1..m for the multi-class
    losses, a {-1,+1} matrix for "binary-logistic", and a real vector for
    "squared" (which requires m = 1).
    """
    _check_kind(kind)
    O = np.asarray(O, dtype=np.float64)
    if kind == "binary-logistic":
        Y = np.asarray(labels, dtype=np.float64)
        return np.logaddexp(0.0, -Y * O).sum(axis=1)
    if kind == "squared":
        if O.shape[1] != 1:
            raise ValueError("squared loss requires a single output")
        r = O[:, 0] - np.asarray(labels, dtype=np.float64)
        return 0.5 * r * r
    y = np.asarray(labels, dtype=np.int64)
    Z = _class_margins(kind, y, O)
    if kind == "squared-hinge":
        M = np.maximum(Z, 0.0)
        M[np.arange(O.shape[0]), y - 1] = 0.0
        return (M * M).sum(axis=1)
    # both logistic variants reduce to a stabilized log-sum-exp of Z
    zmax = Z.max(axis=1)
    return zmax + np.log(np.exp(Z - zmax[:, None]).sum(axis=1))


def loss_gradients(kind: str, labels, O: np.ndarray) -> np.ndarray:
    """Gradient of each per-sample loss w.r.t. its output row (n x m)."""
    _check_kind(kind)
    O = np.asarray(O, dtype=np.float64)
    if kind == "binary-logistic":
        Y = np.asarray(labels, dtype=np.float64)
        # d/do log(1 + exp(-y o)) = -y * sigmoid(-y o)
        return -Y / (1.0 + np.exp(Y * O))
    if kind == "squared":
        return O - np.asarray(labels, dtype=np.float64)[:, None]
    y = np.asarray(labels, dtype=np.int64)
    n = O.shape[0]
    rows = np.arange(n)
    Z = _class_margins(kind, y, O)
    if kind == "squared-hinge":
        G = 2.0 * np.maximum(Z, 0.0)
        G[rows, y - 1] = 0.0
        G[rows, y - 1] = -G.sum(axis=1)
        return G
    G = _softmax_rows(Z)
    G[rows, y - 1] -= 1.0
    return G


def loss_value(kind: str, y, o: np.ndarray) -> float:
    """Single-sample loss; ``y`` is a class index (or sign vector / target)."""
    o = np.atleast_2d(np.asarray(o, dtype=np.float64))
    labels = np.atleast_2d(y) if kind == "binary-logistic" else np.atleast_1d(y)
    return float(loss_values(kind, labels, o)[0])


def loss_gradient(kind: str, y, o: np.ndarray) -> np.ndarray:
    """Single-sample gradient w.r.t. the output vector."""
    o = np.atleast_2d(np.asarray(o, dtype=np.float64))
    labels = np.atleast_2d(y) if kind == "binary-logistic" else np.atleast_1d(y)
    return loss_gradients(kind, labels, o)[0]


def targets_for(kind: str, ds):
    """Pick the label object a loss consumes from a Dataset."""
    if kind == "binary-logistic":
        if ds.Y is None:
            raise ValueError("binary-logistic loss needs a {-1,+1} label matrix")
        return ds.Y
    if kind == "squared":
        return np.asarray(ds.y, dtype=np.float64)
    return ds.y


def output_count(kind: str, ds) -> int:
    """Number of model outputs a loss requires on a Dataset."""
    return 1 if kind == "squared" else ds.m
