"""Planted-model benchmark generators.

Classification samples are labelled by a hidden ground-truth quadratic model
with a shared basis, so a degree-2 learner can in principle reach perfect
accuracy; ratings come from a quantized low-rank user/item model. Both can
be written in the standard text formats to exercise the file loaders.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset, make_dataset


def make_multiclass(n: int, d: int, m: int, n_basis: int = 6, seed: int = 0,
                    margin: float = 0.1, flip: float = 0.0) -> Dataset:
    """Multi-class samples labelled by a planted shared-basis quadratic model.

    Class scores are centered (an intercept a bias-augmented learner can
    absorb) so that no class dominates the argmax. Samples whose top-two
    centered scores differ by less than ``margin`` (relative to the score
    scale) are re-drawn; ``flip`` relabels that fraction of rows uniformly.
    """
    rng = np.random.default_rng(seed)
    H = rng.standard_normal((n_basis, d))
    H /= np.linalg.norm(H, axis=1, keepdims=True)
    V = rng.standard_normal((n_basis, m))

    calib = rng.standard_normal((4096, d))
    Zc = calib @ H.T
    Oc = (Zc * Zc) @ V
    offset = np.quantile(Oc, 0.85, axis=0)  # roughly equalize class win rates
    scale = np.median(np.abs(Oc - offset)) + 1e-12

    X = np.empty((n, d))
    y = np.empty(n, dtype=np.int64)
    filled = 0
    while filled < n:
        batch = rng.standard_normal((max(2 * (n - filled), 64), d))
        Z = batch @ H.T
        O = (Z * Z) @ V - offset
        top2 = np.partition(O, kth=m - 2, axis=1)[:, -2:]
        ok = (top2[:, 1] - top2[:, 0]) >= margin * scale
        take = min(int(ok.sum()), n - filled)
        X[filled:filled + take] = batch[ok][:take]
        y[filled:filled + take] = np.argmax(O[ok][:take], axis=1) + 1
        filled += take
    if flip > 0:
        bad = rng.random(n) < flip
        y[bad] = rng.integers(1, m + 1, size=int(bad.sum()))
    return make_dataset(X, y, m)


def write_svmlight(ds: Dataset, path) -> None:
    """Plain svmlight dump using the 1..m labels (dense rows stay sparse-coded)."""
    X = ds.X
    with open(path, "w", encoding="utf-8") as fh:
        for r in range(ds.n):
            lo, hi = X.indptr[r], X.indptr[r + 1]
            feats = " ".join(f"{X.indices[p] + 1}:{float(X.data[p])!r}" for p in range(lo, hi))
            fh.write(f"{int(ds.y[r])} {feats}".rstrip() + "\n")


def make_ratings(n_users: int, n_items: int, n_ratings: int, rank: int = 4,
                 seed: int = 0, noise: float = 0.05, levels: int = 5):
    """Quantized low-rank ratings; returns (user_id, item_id, rating) arrays.

    Every user and item id appears at least once so the one-hot design matrix
    has exactly n_users + n_items columns. Ids are 1-based like the MovieLens
    files; scores are cut at global quantiles into 1..levels.
    """
    if n_ratings < n_users + n_items:
        raise ValueError("need at least one rating per user and per item")
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((n_users, rank)) / np.sqrt(rank)
    Q = rng.standard_normal((n_items, rank)) / np.sqrt(rank)

    # coverage pairs first, then unique random pairs
    users = [np.arange(n_users), rng.integers(0, n_users, size=n_items)]
    items = [rng.integers(0, n_items, size=n_users), np.arange(n_items)]
    seen = set(zip(np.concatenate(users).tolist(), np.concatenate(items).tolist()))
    need = n_ratings - len(seen)
    while need > 0:
        u = rng.integers(0, n_users, size=int(1.3 * need) + 8)
        i = rng.integers(0, n_items, size=u.size)
        for uu, ii in zip(u.tolist(), i.tolist()):
            pair = (uu, ii)
            if pair not in seen:
                seen.add(pair)
                need -= 1
                if need == 0:
                    break
    pairs = np.array(sorted(seen), dtype=np.int64)
    order = rng.permutation(pairs.shape[0])
    u, i = pairs[order, 0], pairs[order, 1]

    scores = np.einsum("ij,ij->i", P[u], Q[i]) + noise * rng.standard_normal(u.size)
    # skewed level frequencies like typical ratings data
    share = np.array([0.06, 0.11, 0.27, 0.34, 0.22])
    if levels != share.size:
        share = np.full(levels, 1.0 / levels)
    cuts = np.quantile(scores, np.cumsum(share)[:-1])
    ratings = 1 + np.searchsorted(cuts, scores)
    return u + 1, i + 1, ratings.astype(np.int64)


def write_movielens(users, items, ratings, path, sep: str = "\t",
                    timestamps: bool = True) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row, (u, i, r) in enumerate(zip(users, items, ratings)):
            fields = [str(int(u)), str(int(i)), str(int(r))]
            if timestamps:
                fields.append(str(880000000 + row))
            fh.write(sep.join(fields) + "\n")
