"""Selection functions: which coordinates a pair of items is compared on.

A selection function maps each unordered item pair to a nonempty coordinate
subset.  Four kinds are supported:

``full``
    every coordinate, for every pair (the plain feature-utility model).
``top_t``
    the ``t`` coordinates where the two items differ most.  Ranking by the
    two-point sample variance ((a - mu)^2 + (b - mu)^2) / 2 with mu = (a+b)/2
    equals ranking by |a - b| (the variance is |a - b|^2 / 4), so the
    implementation ranks by absolute difference; ties break toward the lower
    coordinate index.
``random_exactly_k``
    a uniformly random k-subset per pair.
``random_bernoulli``
    each coordinate kept independently with probability p; an all-empty draw
    is redrawn so the subset is never empty.

Random subsets are realized once per pair from a stream seeded by
``(seed, i, j)``, so the realized map is a fixed deterministic function of
(spec, features): the same pair always yields the same subset, across calls,
process runs, and realization orders.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidPairError, NotSingleCoordinateError
from .features import FeatureMatrix, check_subset

_KINDS = ("full", "top_t", "random_exactly_k", "random_bernoulli")


@dataclass(frozen=True)
class SelectionSpec:
    """Parameter record for one selection function."""

    kind: str
    t: int | None = None
    k: int | None = None
    p: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown selection kind {self.kind!r}")
        if self.kind == "top_t":
            if self.t is None or int(self.t) < 1:
                raise ValueError("top_t requires an integer t >= 1")
            object.__setattr__(self, "t", int(self.t))
        if self.kind == "random_exactly_k":
            if self.k is None or int(self.k) < 1:
                raise ValueError("random_exactly_k requires an integer k >= 1")
            object.__setattr__(self, "k", int(self.k))
        if self.kind == "random_bernoulli":
            if self.p is None or not 0.0 < float(self.p) <= 1.0:
                raise ValueError("random_bernoulli requires p in (0, 1]")
            object.__setattr__(self, "p", float(self.p))
        if self.kind in ("random_exactly_k", "random_bernoulli"):
            if self.seed is None:
                raise ValueError(f"{self.kind} requires a seed")
            seed = int(self.seed)
            if not 0 <= seed < 2**64:
                raise ValueError("seed must fit in 64 unsigned bits")
            object.__setattr__(self, "seed", seed)

    @classmethod
    def full(cls) -> "SelectionSpec":
        return cls("full")

    @classmethod
    def top_t(cls, t: int) -> "SelectionSpec":
        return cls("top_t", t=t)

    @classmethod
    def random_exactly_k(cls, k: int, seed: int) -> "SelectionSpec":
        return cls("random_exactly_k", k=k, seed=seed)

    @classmethod
    def random_bernoulli(cls, p: float, seed: int) -> "SelectionSpec":
        return cls("random_bernoulli", p=p, seed=seed)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "top_t":
            out["t"] = self.t
        elif self.kind == "random_exactly_k":
            out["k"] = self.k
            out["seed"] = self.seed
        elif self.kind == "random_bernoulli":
            out["p"] = self.p
            out["seed"] = self.seed
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, obj: dict) -> "SelectionSpec":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ValueError("selection spec must be an object with a 'kind' key")
        known = {"kind", "t", "k", "p", "seed"}
        extra = set(obj) - known
        if extra:
            raise ValueError(f"unknown selection spec keys: {sorted(extra)}")
        return cls(
            obj["kind"],
            t=obj.get("t"),
            k=obj.get("k"),
            p=obj.get("p"),
            seed=obj.get("seed"),
        )

    @classmethod
    def from_json(cls, text: str) -> "SelectionSpec":
        return cls.from_dict(json.loads(text))


def pair_index(i: int, j: int, n: int) -> int:
    """Flat index of canonical pair (i < j) in lexicographic pair order."""
    return i * (2 * n - i - 1) // 2 + (j - i - 1)


def all_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Index arrays (i, j) of all canonical pairs in lexicographic order."""
    return np.triu_indices(n, k=1)


class RealizedSelection:
    """A selection spec bound to a feature matrix, memoized per pair.

    Subset lookups are cached under a lock, so concurrent readers observe
    identical results regardless of interleaving; :meth:`diff_table`
    materializes the full masked-difference table once.
    """

    def __init__(self, spec: SelectionSpec, features: FeatureMatrix):
        d = features.d
        if spec.kind == "top_t" and spec.t > d:
            raise DimensionError(f"top_t with t={spec.t} exceeds d={d}")
        if spec.kind == "random_exactly_k" and spec.k > d:
            raise DimensionError(f"random_exactly_k with k={spec.k} exceeds d={d}")
        self.spec = spec
        self.features = features
        self._lock = threading.Lock()
        self._subsets: dict[tuple[int, int], tuple[int, ...]] = {}
        self._diffs: np.ndarray | None = None

    @property
    def n_pairs(self) -> int:
        n = self.features.n
        return n * (n - 1) // 2

    def _canonical(self, i: int, j: int) -> tuple[int, int]:
        n = self.features.n
        if not (0 <= i < n and 0 <= j < n):
            raise InvalidPairError(f"pair ({i}, {j}) out of range for n={n}")
        if i == j:
            raise InvalidPairError(f"item compared with itself: {i}")
        return (i, j) if i < j else (j, i)

    def _compute_subset(self, i: int, j: int) -> tuple[int, ...]:
        d = self.features.d
        spec = self.spec
        if spec.kind == "full":
            return tuple(range(d))
        if spec.kind == "top_t":
            diff = np.abs(self.features.matrix[:, i] - self.features.matrix[:, j])
            order = np.argsort(-diff, kind="stable")
            return tuple(sorted(int(k) for k in order[: spec.t]))
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, i, j]))
        if spec.kind == "random_exactly_k":
            chosen = rng.permutation(d)[: spec.k]
            return tuple(sorted(int(k) for k in chosen))
        # random_bernoulli: redraw until at least one coordinate survives
        while True:
            keep = rng.random(d) < spec.p
            if keep.any():
                return tuple(int(k) for k in np.nonzero(keep)[0])

    def select(self, i: int, j: int) -> tuple[int, ...]:
        """Realized coordinate subset for the pair; symmetric in (i, j)."""
        key = self._canonical(i, j)
        with self._lock:
            got = self._subsets.get(key)
            if got is None:
                got = check_subset(self._compute_subset(*key), self.features.d)
                self._subsets[key] = got
            return got

    def masked_diff(self, i: int, j: int) -> np.ndarray:
        """Masked feature difference U_i - U_j on the pair's subset."""
        a, b = self._canonical(i, j)
        subset = self.select(a, b)
        diff = self.features.matrix[:, i] - self.features.matrix[:, j]
        out = np.zeros_like(diff)
        idx = np.fromiter(subset, dtype=np.int64)
        out[idx] = diff[idx]
        return out

    def diff_table(self) -> np.ndarray:
        """Masked differences for all canonical pairs, shape (C(n,2), d).

        Row order is lexicographic in (i, j); rows are U_i - U_j masked to the
        pair's subset.  Built once and cached read-only.
        """
        with self._lock:
            if self._diffs is None:
                self._diffs = self._build_diff_table()
            return self._diffs

    def _build_diff_table(self) -> np.ndarray:
        U = self.features.matrix
        d, n = U.shape
        ii, jj = all_pairs(n)
        diffs = U[:, ii].T - U[:, jj].T  # (npairs, d)
        spec = self.spec
        if spec.kind == "full":
            keep = np.ones_like(diffs, dtype=bool)
        elif spec.kind == "top_t":
            order = np.argsort(-np.abs(diffs), axis=1, kind="stable")
            keep = np.zeros_like(diffs, dtype=bool)
            np.put_along_axis(keep, order[:, : spec.t], True, axis=1)
        else:
            keep = np.zeros_like(diffs, dtype=bool)
            for r, (a, b) in enumerate(zip(ii.tolist(), jj.tolist())):
                keep[r, list(self._compute_subset(a, b))] = True
        for r, (a, b) in enumerate(zip(ii.tolist(), jj.tolist())):
            self._subsets.setdefault(
                (a, b), tuple(int(k) for k in np.nonzero(keep[r])[0])
            )
        out = np.where(keep, diffs, 0.0)
        out.setflags(write=False)
        return out

    def partition_by_coordinate(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Group all pairs by their single selected coordinate.

        Requires every realized subset to be a singleton; returns one pair
        tuple per coordinate (possibly empty), a partition of all C(n,2)
        pairs.
        """
        n = self.features.n
        d = self.features.d
        groups: list[list[tuple[int, int]]] = [[] for _ in range(d)]
        ii, jj = all_pairs(n)
        for a, b in zip(ii.tolist(), jj.tolist()):
            subset = self.select(a, b)
            if len(subset) != 1:
                raise NotSingleCoordinateError(
                    f"pair ({a}, {b}) selects {len(subset)} coordinates, need 1"
                )
            groups[subset[0]].append((a, b))
        return tuple(tuple(g) for g in groups)


def realize(spec: SelectionSpec, features: FeatureMatrix) -> RealizedSelection:
    return RealizedSelection(spec, features)
