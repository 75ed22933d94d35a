"""The context-dependent pairwise comparison model and its likelihood.

Item ``i`` beats item ``j`` with probability ``sigma(<w, x_ij>)`` where
``sigma`` is the logistic function and ``x_ij`` is the feature difference
``U_i - U_j`` masked to the coordinates the selection function picks for the
pair.  A dataset of independent outcomes has negative log-likelihood

    L(w) = sum_l [ log(1 + exp(u_l)) - y_l * u_l ],    u_l = <w, x_l>,

which is the logistic-regression loss on features ``x_l``; an optional ridge
term ``mu * ||w||^2`` is added on top.  The gradient and Hessian are closed
form:

    grad L = sum_l (sigma(u_l) - y_l) * x_l + 2 mu w
    hess L = sum_l h(u_l) * x_l x_l^T + 2 mu I,   h(u) = e^u / (1 + e^u)^2.

``h`` is symmetric, positive, at most 1/4, and nonincreasing in |u|, so the
Hessian is symmetric positive semidefinite and L is convex.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from . import _kernels
from .errors import DimensionError, InvalidPairError, PreconditionError
from .features import FeatureMatrix, check_weights
from .selection import RealizedSelection


@dataclass(frozen=True)
class Provenance:
    """Where a dataset came from: a simulation seed or a file path."""

    kind: str  # "synthetic" | "file"
    seed: int | None = None
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ("synthetic", "file"):
            raise ValueError(f"unknown provenance kind {self.kind!r}")

    @classmethod
    def synthetic(cls, seed: int) -> "Provenance":
        return cls("synthetic", seed=int(seed))

    @classmethod
    def file(cls, path: str) -> "Provenance":
        return cls("file", path=str(path))


class ComparisonSample(NamedTuple):
    i: int
    j: int
    y: int  # 1 iff item i beat item j; storage is canonical i < j


@dataclass(frozen=True)
class ComparisonDataset:
    """Ordered pairwise comparison outcomes in canonical (i < j, y) form.

    A record arriving as "j beat i" with j > i is stored as (i, j, y=0).
    Repeated observations of the same pair stay separate samples, matching
    the independence structure of the likelihood.
    """

    i: np.ndarray
    j: np.ndarray
    y: np.ndarray
    n_items: int
    provenance: Provenance

    def __post_init__(self):
        i = np.asarray(self.i, dtype=np.int64)
        j = np.asarray(self.j, dtype=np.int64)
        y = np.asarray(self.y, dtype=np.int64)
        if not (i.shape == j.shape == y.shape) or i.ndim != 1:
            raise DimensionError("i, j, y must be 1-d arrays of equal length")
        if np.any(i == j):
            raise InvalidPairError("a sample compares an item with itself")
        swap = i > j
        if np.any(swap):
            i2 = np.where(swap, j, i)
            j2 = np.where(swap, i, j)
            y = np.where(swap, 1 - y, y)
            i, j = i2, j2
        if i.size and (i.min() < 0 or j.max() >= self.n_items):
            raise InvalidPairError("sample indices out of range")
        if not np.isin(y, (0, 1)).all():
            raise ValueError("outcomes must be 0 or 1")
        for name, arr in (("i", i), ("j", j), ("y", y)):
            arr = np.ascontiguousarray(arr)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return int(self.i.shape[0])

    def __getitem__(self, k: int) -> ComparisonSample:
        return ComparisonSample(int(self.i[k]), int(self.j[k]), int(self.y[k]))

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    @classmethod
    def from_records(
        cls,
        records: Iterable[tuple[int, int, int]],
        n_items: int,
        provenance: Provenance,
    ) -> "ComparisonDataset":
        rec = list(records)
        if rec:
            arr = np.asarray(rec, dtype=np.int64).reshape(len(rec), 3)
            i, j, y = arr[:, 0], arr[:, 1], arr[:, 2]
        else:
            i = j = y = np.empty(0, dtype=np.int64)
        return cls(i, j, y, n_items, provenance)

    def aggregate(self) -> dict[tuple[int, int], tuple[int, int]]:
        """Per canonical pair: (# wins for i, # wins for j)."""
        out: dict[tuple[int, int], list[int]] = {}
        for a, b, yy in zip(self.i.tolist(), self.j.tolist(), self.y.tolist()):
            wins = out.setdefault((a, b), [0, 0])
            wins[0 if yy == 1 else 1] += 1
        return {k: (v[0], v[1]) for k, v in out.items()}


def design_matrix(sel: RealizedSelection, data: ComparisonDataset) -> np.ndarray:
    """Masked feature differences per sample, shape (m, d)."""
    n = sel.features.n
    if data.n_items != n:
        raise DimensionError(
            f"dataset indexes {data.n_items} items, features have {n}"
        )
    table = sel.diff_table()
    flat = data.i * (2 * n - data.i - 1) // 2 + (data.j - data.i - 1)
    return table[flat]


def win_probability(
    features: FeatureMatrix,
    w,
    sel: RealizedSelection,
    i: int,
    j: int,
) -> float:
    """P(item i beats item j) under weights ``w``.

    Exactly antisymmetric: swapping i and j negates the masked difference, so
    the two probabilities sum to 1.
    """
    w = check_weights(w, features.d)
    x = sel.masked_diff(i, j)
    return float(_kernels.sigmoid(float(x @ w)))


def all_pair_probabilities(features: FeatureMatrix, w, sel: RealizedSelection):
    """P(i beats j) for every canonical pair, in lexicographic pair order."""
    w = check_weights(w, features.d)
    return _kernels.sigmoid(sel.diff_table() @ w)


def sample_comparisons(
    features: FeatureMatrix,
    w_star,
    sel: RealizedSelection,
    m: int,
    seed: int,
) -> ComparisonDataset:
    """Draw ``m`` independent comparisons: uniform pairs, logistic outcomes.

    Each sample picks a pair uniformly at random (with replacement) from all
    C(n,2) pairs, then flips a coin with the model's win probability.  Fully
    deterministic given ``seed``.
    """
    if m < 1:
        raise PreconditionError(f"need m >= 1 samples, got {m}")
    n = features.n
    if n < 2:
        raise PreconditionError("need at least 2 items to compare")
    w_star = check_weights(w_star, features.d)
    probs = all_pair_probabilities(features, w_star, sel)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    flat = rng.integers(0, probs.shape[0], size=m)
    wins = rng.random(m) < probs[flat]
    ii, jj = np.triu_indices(n, k=1)
    return ComparisonDataset(
        ii[flat], jj[flat], wins.astype(np.int64), n, Provenance.synthetic(seed)
    )


def _prepared(features, w, sel, data):
    w = check_weights(w, features.d)
    X = design_matrix(sel, data)
    y = data.y.astype(np.float64)
    return X, y, w


def nll(features, w, sel, data: ComparisonDataset, mu: float = 0.0) -> float:
    """Ridge-regularized negative log-likelihood of ``w``."""
    if mu < 0:
        raise PreconditionError("ridge weight mu must be nonnegative")
    X, y, w = _prepared(features, w, sel, data)
    return float(_kernels.nll_value(X, y, w, float(mu)))


def nll_gradient(features, w, sel, data: ComparisonDataset, mu: float = 0.0):
    if mu < 0:
        raise PreconditionError("ridge weight mu must be nonnegative")
    X, y, w = _prepared(features, w, sel, data)
    return _kernels.nll_grad(X, y, w, float(mu))


def nll_hessian(features, w, sel, data: ComparisonDataset, mu: float = 0.0):
    if mu < 0:
        raise PreconditionError("ridge weight mu must be nonnegative")
    X, y, w = _prepared(features, w, sel, data)
    return _kernels.nll_hess(X, y, w, float(mu))
