"""Factored degree-2 models: squared (PN) and ANOVA (FM) activations,
multi-output prediction and JSON persistence.

A model is a basis matrix H (k x d, rows inside the unit l2 ball) and an
output matrix V (k x m); output c is sum_r sigma(h_r, x) v_{r,c}. The dense
per-output weight matrices implied by the factorization are never built.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

MODEL_KINDS = ("pn", "fm")
ROW_NORM_SLACK = 1e-9


@dataclass
class Model:
    kind: str
    H: np.ndarray  # (k, d)
    V: np.ndarray  # (k, m)
    loss: str
    penalty: str
    lam: float
    label_map: tuple = ()
    bias_augmented: bool = False

    @property
    def k(self) -> int:
        return self.H.shape[0]

    @property
    def d(self) -> int:
        return self.H.shape[1]

    @property
    def m(self) -> int:
        return self.V.shape[1]


def empty_model(kind, d, m, loss, penalty, lam, label_map=(), bias_augmented=False) -> Model:
    return Model(kind=kind, H=np.zeros((0, d)), V=np.zeros((0, m)), loss=loss,
                 penalty=penalty, lam=float(lam), label_map=tuple(label_map),
                 bias_augmented=bias_augmented)


def check_model(model: Model) -> None:
    if model.kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {model.kind!r}")
    if model.H.shape[0] != model.V.shape[0]:
        raise ValueError(f"H has {model.H.shape[0]} rows but V has {model.V.shape[0]}")
    if model.k:
        norms = np.linalg.norm(model.H, axis=1)
        worst = norms.max()
        if worst > 1.0 + ROW_NORM_SLACK:
            raise ValueError(f"basis row norm {worst} exceeds the unit ball")


def activation(kind: str, h: np.ndarray, x) -> float:
    """Activation of one hidden unit on one sample.

    PN: (h^T x)^2.  FM: sum over feature pairs i<j of x_i h_i x_j h_j,
    computed as ((h^T x)^2 - sum_j h_j^2 x_j^2) / 2 in O(nnz(x)).
    """
    if sp.issparse(x):
        x = x.toarray().ravel()
    x = np.asarray(x, dtype=np.float64)
    s = float(h @ x)
    if kind == "pn":
        return s * s
    if kind == "fm":
        return 0.5 * (s * s - float((h * h) @ (x * x)))
    raise ValueError(f"unknown model kind {kind!r}")


def hidden_activations(kind: str, H: np.ndarray, X) -> np.ndarray:
    """Activation matrix Phi (n x k): Phi[i, r] = sigma(h_r, x_i)."""
    Z = X @ H.T
    Z = np.asarray(Z)
    if kind == "pn":
        return Z * Z
    if kind == "fm":
        if sp.issparse(X):
            X2 = X.multiply(X)
        else:
            X2 = np.asarray(X) ** 2
        return 0.5 * (Z * Z - np.asarray(X2 @ (H * H).T))
    raise ValueError(f"unknown model kind {kind!r}")


def outputs(model: Model, X) -> np.ndarray:
    """Model outputs (n x m); the empty model returns zeros."""
    if sp.issparse(X) or np.asarray(X).ndim == 2:
        n = X.shape[0]
    else:
        X = np.asarray(X)[None, :]
        n = 1
    if model.k == 0:
        return np.zeros((n, model.m))
    return hidden_activations(model.kind, model.H, X) @ model.V


def predict_class(model: Model, X) -> np.ndarray:
    """Argmax class indices in 1..m; ties go to the smallest index."""
    return np.argmax(outputs(model, X), axis=1) + 1


def accuracy(model: Model, ds) -> float:
    return float(np.mean(predict_class(model, ds.X) == ds.y))


def _render_floats(values) -> str:
    # full-precision JSON doubles: 17 significant digits always round-trip
    return "[" + ", ".join(format(float(v), ".16e") for v in values) + "]"


def model_to_json(model: Model) -> str:
    """Serialize to the fixed single-document JSON layout."""
    fields = [
        f'"kind": {json.dumps(model.kind)}',
        f'"loss": {json.dumps(model.loss)}',
        f'"penalty": {json.dumps(model.penalty)}',
        f'"lambda": {format(float(model.lam), ".16e")}',
        f'"d": {model.d}',
        f'"m": {model.m}',
        f'"k": {model.k}',
        f'"H": {_render_floats(model.H.ravel())}',
        f'"V": {_render_floats(model.V.ravel())}',
        f'"label_map": {json.dumps(list(model.label_map))}',
        f'"bias_augmented": {json.dumps(model.bias_augmented)}',
    ]
    return "{\n" + ",\n".join("  " + f for f in fields) + "\n}\n"


def save_model(model: Model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_json(model))


def load_model(path) -> Model:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    k, d, m = int(doc["k"]), int(doc["d"]), int(doc["m"])
    model = Model(
        kind=doc["kind"],
        H=np.asarray(doc["H"], dtype=np.float64).reshape(k, d),
        V=np.asarray(doc["V"], dtype=np.float64).reshape(k, m),
        loss=doc["loss"],
        penalty=doc["penalty"],
        lam=float(doc["lambda"]),
        label_map=tuple(doc["label_map"]),
        bias_augmented=bool(doc["bias_augmented"]),
    )
    check_model(model)
    return model


def copy_model(model: Model) -> Model:
    return replace(model, H=model.H.copy(), V=model.V.copy())
