"""Dataset container, svmlight / MovieLens ingestion and train/valid/test splitting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

MOVIELENS_SEPARATORS = ("\t", "::")


class DataError(ValueError):
    """Malformed input file or inconsistent dataset construction."""


@dataclass(frozen=True)
class Dataset:
    """Immutable design matrix with labels.

    ``X`` is CSR with sorted, duplicate-free column indices per row. ``y``
    holds contiguous class indices (or rating levels) in 1..m; the original
    file labels live in ``label_map`` (position c-1 = original label of
    class c). ``Y``, when present, is a {-1,+1} sign matrix of shape (n, m).
    ``group_ids`` carries a per-row ranking-group id (the user index for
    MovieLens loads).
    """

    X: sp.csr_matrix
    y: np.ndarray
    m: int
    label_map: tuple
    Y: np.ndarray | None = None
    group_ids: np.ndarray | None = None
    bias_augmented: bool = False

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def __post_init__(self):
        _freeze(self.X)
        self.y.setflags(write=False)
        if self.Y is not None:
            self.Y.setflags(write=False)
        if self.group_ids is not None:
            self.group_ids.setflags(write=False)


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.5
    valid: float = 0.25
    test: float = 0.25
    seed: int = 0

    def __post_init__(self):
        fracs = (self.train, self.valid, self.test)
        if any(f <= 0 for f in fracs):
            raise DataError(f"split fractions must be positive, got {fracs}")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise DataError(f"split fractions must sum to 1, got {sum(fracs)}")


def _freeze(X: sp.csr_matrix) -> None:
    X.data.setflags(write=False)
    X.indices.setflags(write=False)
    X.indptr.setflags(write=False)


def make_dataset(X, y, m, label_map=None, Y=None, group_ids=None, bias_augmented=False) -> Dataset:
    """Build a validated Dataset from a CSR matrix and contiguous labels."""
    X = sp.csr_matrix(X, dtype=np.float64, copy=True)
    X.sum_duplicates()
    X.sort_indices()
    y = np.array(y, copy=True)
    if X.shape[0] != y.shape[0]:
        raise DataError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
    if Y is None and y.size and (y.min() < 1 or y.max() > m):
        raise DataError(f"labels must lie in 1..{m}")
    if Y is not None:
        Y = np.array(Y, dtype=np.float64, copy=True)
        if Y.shape != (X.shape[0], m):
            raise DataError(f"Y has shape {Y.shape}, expected {(X.shape[0], m)}")
        if not np.all(np.abs(Y) == 1.0):
            raise DataError("sign-matrix entries must be exactly -1 or +1")
    if label_map is None:
        label_map = tuple(range(1, m + 1))
    return Dataset(X=X, y=y, m=m, label_map=tuple(label_map), Y=Y,
                   group_ids=group_ids, bias_augmented=bias_augmented)


def load_svmlight(path, augment_bias: bool = False) -> Dataset:
    """Parse an svmlight/libsvm multi-class file (1-based feature indices).

    Labels are remapped to contiguous 1..m preserving the sorted order of the
    observed labels. With ``augment_bias`` a constant-1 feature is prepended
    as column 1 and all feature indices shift right by one.
    """
    labels = []
    rows_idx = []
    rows_val = []
    max_index = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                label = float(parts[0])
            except ValueError:
                raise DataError(f"{path}: line {lineno}: bad label {parts[0]!r}") from None
            if not np.isfinite(label):
                raise DataError(f"{path}: line {lineno}: non-finite label")
            idx = []
            val = []
            prev = 0
            for tok in parts[1:]:
                try:
                    i_str, v_str = tok.split(":", 1)
                    i = int(i_str)
                    v = float(v_str)
                except ValueError:
                    raise DataError(f"{path}: line {lineno}: bad feature {tok!r}") from None
                if i < 1:
                    raise DataError(f"{path}: line {lineno}: index {i} is not 1-based")
                if i <= prev:
                    raise DataError(f"{path}: line {lineno}: indices must be strictly increasing")
                if not np.isfinite(v):
                    raise DataError(f"{path}: line {lineno}: non-finite value {v_str!r}")
                prev = i
                idx.append(i)
                val.append(v)
            labels.append(label)
            rows_idx.append(idx)
            rows_val.append(val)
            if idx:
                max_index = max(max_index, idx[-1])

    n = len(labels)
    shift = 1 if augment_bias else 0
    d = max_index + shift
    indptr = np.zeros(n + 1, dtype=np.int64)
    nnz_per_row = [len(r) + shift for r in rows_idx]
    np.cumsum(nnz_per_row, out=indptr[1:])
    indices = np.empty(indptr[-1], dtype=np.int64)
    data = np.empty(indptr[-1], dtype=np.float64)
    for r, (idx, val) in enumerate(zip(rows_idx, rows_val)):
        lo = indptr[r]
        if augment_bias:
            indices[lo] = 0
            data[lo] = 1.0
            lo += 1
        # file indices are 1-based; unshifted they map to columns i-1
        indices[lo:indptr[r + 1]] = [i - 1 + shift for i in idx]
        data[lo:indptr[r + 1]] = val
    X = sp.csr_matrix((data, indices, indptr), shape=(n, d))

    uniq = sorted(set(labels))
    remap = {lab: c + 1 for c, lab in enumerate(uniq)}
    y = np.array([remap[lab] for lab in labels], dtype=np.int64)
    m = max(len(uniq), 1)
    return make_dataset(X, y, m, label_map=uniq, bias_augmented=augment_bias)


def save_svmlight(ds: Dataset, path) -> None:
    """Write a Dataset back to svmlight text (exact round-trip of values)."""
    X = ds.X
    with open(path, "w", encoding="utf-8") as fh:
        for r in range(ds.n):
            lo, hi = X.indptr[r], X.indptr[r + 1]
            label = float(ds.label_map[int(ds.y[r]) - 1])
            feats = " ".join(
                f"{X.indices[p] + 1}:{float(X.data[p])!r}" for p in range(lo, hi)
            )
            fh.write(f"{label!r} {feats}".rstrip() + "\n")


def load_movielens(path, sep: str = "\t") -> Dataset:
    """Parse a MovieLens ratings file into one-hot user/item rows.

    Each record is ``user sep item sep rating [sep timestamp]``. Observed
    user ids map (sorted) to the first columns, item ids to the following
    ones, so every row has exactly two unit entries. Ratings become the
    label levels 1..m with m = max rating.
    """
    if sep not in MOVIELENS_SEPARATORS:
        raise DataError(f"unknown separator {sep!r}; expected one of {MOVIELENS_SEPARATORS}")
    users = []
    items = []
    ratings = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(sep)
            if len(fields) < 3:
                raise DataError(f"{path}: line {lineno}: expected user{sep}item{sep}rating")
            try:
                u = int(fields[0])
                i = int(fields[1])
                r = float(fields[2])
            except ValueError:
                raise DataError(f"{path}: line {lineno}: bad record {line!r}") from None
            if r < 1 or r != int(r):
                raise DataError(f"{path}: line {lineno}: rating {r} outside 1..m")
            users.append(u)
            items.append(i)
            ratings.append(int(r))

    n = len(ratings)
    user_ids = np.asarray(users, dtype=np.int64)
    item_ids = np.asarray(items, dtype=np.int64)
    uniq_users, user_col = np.unique(user_ids, return_inverse=True)
    uniq_items, item_col = np.unique(item_ids, return_inverse=True)
    n_users = uniq_users.size
    d = n_users + uniq_items.size

    indptr = np.arange(0, 2 * n + 1, 2, dtype=np.int64)
    indices = np.empty(2 * n, dtype=np.int64)
    indices[0::2] = user_col
    indices[1::2] = n_users + item_col
    data = np.ones(2 * n, dtype=np.float64)
    X = sp.csr_matrix((data, indices, indptr), shape=(n, d))

    y = np.asarray(ratings, dtype=np.int64)
    m = int(y.max()) if n else 1
    return make_dataset(X, y, m, label_map=range(1, m + 1), group_ids=user_col)


def take_rows(ds: Dataset, rows: np.ndarray) -> Dataset:
    """Row-subset of a Dataset (keeps label_map / m / metadata)."""
    rows = np.asarray(rows)
    return make_dataset(
        ds.X[rows],
        ds.y[rows],
        ds.m,
        label_map=ds.label_map,
        Y=None if ds.Y is None else ds.Y[rows],
        group_ids=None if ds.group_ids is None else ds.group_ids[rows],
        bias_augmented=ds.bias_augmented,
    )


def _partition_sizes(n: int, fractions) -> np.ndarray:
    # largest-remainder rounding: sizes within 1 of n * fraction, summing to n
    target = np.asarray(fractions, dtype=np.float64) * n
    base = np.floor(target).astype(np.int64)
    leftover = n - int(base.sum())
    order = np.argsort(-(target - base), kind="stable")
    base[order[:leftover]] += 1
    return base


def split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Disjoint, exhaustive, seed-reproducible train/valid/test row partition."""
    if ds.n < 4:
        raise DataError(f"need at least 4 samples to split, got {ds.n}")
    sizes = _partition_sizes(ds.n, (spec.train, spec.valid, spec.test))
    perm = np.random.default_rng(spec.seed).permutation(ds.n)
    a, b = sizes[0], sizes[0] + sizes[1]
    return take_rows(ds, perm[:a]), take_rows(ds, perm[a:b]), take_rows(ds, perm[b:])
