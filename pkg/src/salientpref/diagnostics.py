"""Empirical pair statistics, stochastic-transitivity checks, inconsistency.

Strong stochastic transitivity demands that whenever P(i>j) > 1/2 and
P(j>k) > 1/2, also P(i>k) >= max(P(i>j), P(j>k)); the moderate form asks
>= min of the two and the weak form asks >= 1/2.  Plain feature-utility
comparisons always satisfy all three; context-dependent masking can break
them, and these reports count how often.

An unordered triple is checked once: the six chain orientations are tried in
lexicographic order and the first whose two chained probabilities strictly
exceed 1/2 is classified.  Probabilities equal to exactly 1/2 never qualify
as a chain link.  A triple that violates the weak form also violates the
moderate and strong forms, so the three counters are nested.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np

from . import _kernels
from .errors import PreconditionError, UndefinedMetricError
from .features import FeatureMatrix
from .model import ComparisonDataset, all_pair_probabilities
from .ranking import Ranking
from .selection import RealizedSelection


@dataclass(frozen=True)
class PairStats:
    """Win counts per canonical pair (i < j): (wins for i, wins for j)."""

    counts: dict[tuple[int, int], tuple[int, int]]

    def total(self, pair: tuple[int, int]) -> int:
        wi, wj = self.counts[pair]
        return wi + wj

    def p_hat(self, min_count: int = 0) -> dict[tuple[int, int], float]:
        """Empirical P(i beats j) per pair, dropping pairs observed fewer
        than ``min_count`` times."""
        out = {}
        for pair, (wi, wj) in self.counts.items():
            tot = wi + wj
            if tot == 0 or tot < min_count:
                continue
            out[pair] = wi / tot
        return out


def empirical_pair_stats(data: ComparisonDataset) -> PairStats:
    return PairStats(data.aggregate())


class TripleViolation(NamedTuple):
    """A checked orientation (i, j, k) that violates strong transitivity."""

    i: int
    j: int
    k: int
    moderate: bool
    weak: bool


@dataclass(frozen=True)
class TransitivityReport:
    triples_checked: int
    strong_violations: int
    moderate_violations: int
    weak_violations: int
    violations: tuple[TripleViolation, ...]

    def __post_init__(self):
        if not (
            self.weak_violations
            <= self.moderate_violations
            <= self.strong_violations
            <= self.triples_checked
        ):
            raise ValueError("violation counts must be nested")

    def rate(self, level: str) -> float | None:
        """Violations per checked triple; None when nothing was checked."""
        if self.triples_checked == 0:
            return None
        return {
            "strong": self.strong_violations,
            "moderate": self.moderate_violations,
            "weak": self.weak_violations,
        }[level] / self.triples_checked

    def to_dict(self) -> dict:
        return {
            "triples_checked": self.triples_checked,
            "strong_violations": self.strong_violations,
            "moderate_violations": self.moderate_violations,
            "weak_violations": self.weak_violations,
            "strong_rate": self.rate("strong"),
            "moderate_rate": self.rate("moderate"),
            "weak_rate": self.rate("weak"),
            "violating_triples": [
                {
                    "triple": [v.i, v.j, v.k],
                    "strong": True,
                    "moderate": v.moderate,
                    "weak": v.weak,
                }
                for v in self.violations
            ],
        }


def _report_from_scan(checked: int, viol: np.ndarray) -> TransitivityReport:
    rows = [
        TripleViolation(int(r[0]), int(r[1]), int(r[2]), bool(r[3]), bool(r[4]))
        for r in viol
    ]
    return TransitivityReport(
        triples_checked=int(checked),
        strong_violations=len(rows),
        moderate_violations=sum(v.moderate for v in rows),
        weak_violations=sum(v.weak for v in rows),
        violations=tuple(rows),
    )


def count_transitivity_violations(
    p: "Mapping[tuple[int, int], float] | PairStats",
    min_count: int | None = None,
) -> TransitivityReport:
    """Classify every triple whose three pairwise probabilities are present.

    ``p`` maps canonical pairs (i < j) to P(i beats j); passing a
    :class:`PairStats` applies the optional ``min_count`` filter first.
    Missing pairs simply exclude their triples from the scan.
    """
    if isinstance(p, PairStats):
        probs = p.p_hat(min_count or 0)
    else:
        if min_count is not None:
            raise ValueError("min_count requires PairStats input (counts needed)")
        probs = dict(p)
    for pair, val in probs.items():
        if not 0.0 <= val <= 1.0:
            raise ValueError(f"probability for pair {pair} outside [0, 1]: {val}")
        if pair[0] >= pair[1]:
            raise ValueError(f"pair {pair} is not canonical (need i < j)")

    # triangle enumeration on the support graph, each unordered triple once
    neighbors: dict[int, set[int]] = {}
    for a, b in probs:
        neighbors.setdefault(a, set()).add(b)
        neighbors.setdefault(b, set()).add(a)

    def prob(x: int, y: int) -> float:
        return probs[(x, y)] if x < y else 1.0 - probs[(y, x)]

    checked = 0
    rows: list[TripleViolation] = []
    for (a, b), _ in sorted(probs.items()):
        common = neighbors[a] & neighbors[b]
        for c in sorted(common):
            if c <= b:
                continue  # enumerate each triangle once as a < b < c
            orientation = None
            for x, y, z in (
                (a, b, c),
                (a, c, b),
                (b, a, c),
                (b, c, a),
                (c, a, b),
                (c, b, a),
            ):
                if prob(x, y) > 0.5 and prob(y, z) > 0.5:
                    orientation = (x, y, z)
                    break
            if orientation is None:
                continue
            checked += 1
            x, y, z = orientation
            pxy, pyz, pxz = prob(x, y), prob(y, z), prob(x, z)
            if pxz < max(pxy, pyz):
                rows.append(
                    TripleViolation(x, y, z, pxz < min(pxy, pyz), pxz < 0.5)
                )
    return TransitivityReport(
        triples_checked=checked,
        strong_violations=len(rows),
        moderate_violations=sum(v.moderate for v in rows),
        weak_violations=sum(v.weak for v in rows),
        violations=tuple(rows),
    )


def model_transitivity_report(
    features: FeatureMatrix, w, sel: RealizedSelection
) -> TransitivityReport:
    """Exact model probabilities for all pairs, scanned for violations."""
    n = features.n
    if n < 3:
        raise PreconditionError("transitivity needs at least 3 items")
    probs = all_pair_probabilities(features, w, sel)
    P = np.full((n, n), 0.5)
    ii, jj = np.triu_indices(n, k=1)
    P[ii, jj] = probs
    P[jj, ii] = 1.0 - probs
    present = ~np.eye(n, dtype=bool)
    checked, viol = _kernels.transitivity_scan(P, present)
    return _report_from_scan(checked, viol)


@dataclass(frozen=True)
class InconsistencyReport:
    """Pairs whose two probability sources disagree about the likely winner."""

    pairs_compared: int
    inconsistent: int
    disagreeing_pairs: tuple[tuple[int, int], ...]

    @property
    def rate(self) -> float:
        return self.inconsistent / self.pairs_compared

    def to_dict(self) -> dict:
        return {
            "pairs_compared": self.pairs_compared,
            "inconsistent": self.inconsistent,
            "inconsistency_rate": self.rate,
            "disagreeing_pairs": [list(p) for p in self.disagreeing_pairs],
        }


def pairwise_inconsistency(
    p: Mapping[tuple[int, int], float],
    reference: "Ranking | Mapping[tuple[int, int], float]",
) -> InconsistencyReport:
    """Count pairs with (1/2 - p1)(1/2 - p2) < 0 over the common support.

    When ``reference`` is a ranking, its implied probability is 1 if it
    places i above j and 0 otherwise.  A probability of exactly 1/2 on either
    side makes the product zero, which never counts as inconsistent.
    """
    if isinstance(reference, Ranking):
        ref = {}
        for (a, b) in p:
            if 0 <= a < reference.n and 0 <= b < reference.n:
                ref[(a, b)] = 1.0 if reference.positions[a] < reference.positions[b] else 0.0
    else:
        ref = dict(reference)
    common = sorted(set(p) & set(ref))
    if not common:
        raise UndefinedMetricError("probability sources share no pairs")
    bad = [
        pair for pair in common if (0.5 - p[pair]) * (0.5 - ref[pair]) < 0.0
    ]
    return InconsistencyReport(
        pairs_compared=len(common),
        inconsistent=len(bad),
        disagreeing_pairs=tuple(bad),
    )
