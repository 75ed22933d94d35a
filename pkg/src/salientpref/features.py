"""Item feature matrices, judgment weights, and coordinate masking.

Items live in a d-dimensional feature space.  The feature matrix stores one
column per item (shape ``(d, n)``); a judgment weight vector ``w`` assigns a
full-feature utility ``<w, U_j>`` to item ``j``.  A comparison between two
items may only see a coordinate subset, realized by :func:`mask`.

Conventions: item and coordinate indices are 0-based throughout the library;
subsets are strictly increasing tuples of coordinate indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .errors import DimensionError


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FeatureMatrix:
    """Known item features: column ``j`` of ``matrix`` is item ``j``.

    Invariants enforced on construction: all entries finite, n >= 2, d >= 1,
    and item identifiers unique with one per column.  Instances are immutable
    (the array is marked read-only) and safe to share across threads.
    """

    matrix: np.ndarray
    item_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2:
            raise DimensionError(f"feature matrix must be 2-d, got ndim={m.ndim}")
        d, n = m.shape
        if d < 1 or n < 2:
            raise DimensionError(f"need d >= 1 and n >= 2, got d={d}, n={n}")
        if not np.all(np.isfinite(m)):
            raise DimensionError("feature matrix contains non-finite entries")
        if self.item_ids is None:
            ids = tuple(f"item{k}" for k in range(n))
        else:
            ids = tuple(str(s) for s in self.item_ids)
        if len(ids) != n:
            raise DimensionError(f"{len(ids)} item ids for {n} items")
        if len(set(ids)) != n:
            raise DimensionError("item ids must be pairwise distinct")
        object.__setattr__(self, "matrix", _readonly(m))
        object.__setattr__(self, "item_ids", ids)

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    def column(self, j: int) -> np.ndarray:
        if not 0 <= j < self.n:
            raise DimensionError(f"item index {j} out of range for n={self.n}")
        return self.matrix[:, j]

    @cached_property
    def _id_index(self) -> dict[str, int]:
        return {s: k for k, s in enumerate(self.item_ids)}

    def index_of(self, item_id: str) -> int:
        try:
            return self._id_index[item_id]
        except KeyError:
            raise KeyError(f"unknown item id {item_id!r}") from None

    @classmethod
    def from_columns(cls, columns, item_ids=None) -> "FeatureMatrix":
        """Build from an iterable of per-item vectors."""
        cols = np.column_stack([np.asarray(c, dtype=np.float64) for c in columns])
        if item_ids is None:
            item_ids = tuple(f"item{k}" for k in range(cols.shape[1]))
        return cls(cols, tuple(item_ids))


def check_weights(w, d: int) -> np.ndarray:
    """Validate a judgment weight vector against feature dimension ``d``."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (d,):
        raise DimensionError(f"weight vector shape {w.shape} does not match d={d}")
    if not np.all(np.isfinite(w)):
        raise DimensionError("weight vector contains non-finite entries")
    return w


def check_subset(indices, d: int) -> tuple[int, ...]:
    """Validate a coordinate subset: nonempty, strictly increasing, within [0, d)."""
    subset = tuple(int(k) for k in indices)
    if not subset:
        raise DimensionError("coordinate subset is empty")
    for a, b in zip(subset, subset[1:]):
        if b <= a:
            raise DimensionError(f"subset {subset} is not strictly increasing")
    if subset[0] < 0 or subset[-1] >= d:
        raise DimensionError(f"subset {subset} out of range for d={d}")
    return subset


def mask(x, subset) -> np.ndarray:
    """Zero out every coordinate of ``x`` not in ``subset``.

    The result agrees with ``x`` on the subset and is 0 elsewhere, so masking
    is idempotent and the full subset is the identity.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError("mask expects a 1-d vector")
    subset = check_subset(subset, x.shape[0])
    out = np.zeros_like(x)
    idx = np.fromiter(subset, dtype=np.int64)
    out[idx] = x[idx]
    return out


def center_columns(fm: FeatureMatrix) -> FeatureMatrix:
    """Subtract the column mean from every column.

    Pairwise differences ``U_i - U_j`` are unchanged exactly (a common vector
    is subtracted), so pairwise comparison probabilities are unaffected.
    """
    centered = fm.matrix - fm.matrix.mean(axis=1, keepdims=True)
    return FeatureMatrix(centered, fm.item_ids)


def min_singular_value_after_centering(fm: FeatureMatrix) -> float:
    """Smallest singular value of the centered feature matrix.

    Computed from the eigenvalues of the smaller Gram matrix; zero (within
    1e-10) exactly when the all-ones vector lies in the row space of the
    original matrix, which is what centering annihilates.
    """
    c = fm.matrix - fm.matrix.mean(axis=1, keepdims=True)
    d, n = c.shape
    gram = c @ c.T if d <= n else c.T @ c
    eigs = _kernels.sym_eigvals(gram)
    smallest = float(eigs[0])
    if smallest < 0.0:  # roundoff on a PSD matrix
        smallest = 0.0
    return float(np.sqrt(smallest))
