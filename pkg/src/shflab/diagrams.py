"""Collision patterns and their combinatorics.

A collision pattern for ``h`` walkers is a sequence of ``m`` unordered pairs
``{i_r, j_r}`` from ``{1..h}`` in which consecutive pairs differ.  There are
``C(h,2) * (C(h,2) - 1)^(m-1)`` such sequences.  Each pattern determines a
parent map: ``p(i_r)`` is the latest earlier streak involving walker ``i_r``
(0 if none), and likewise ``p(j_r)``.  Streaks split into the set A where both
parents coincide and its complement B; the multiset of index gaps ``r - p``
(one per A-streak, two per B-streak) drives the spanning-tree estimates, via
the AM-GM bound: the product of the top ``ceil(m/2)`` gaps is at most
``(2h)^ceil(m/2)``, because total jump length across all walkers is at most
``m * h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .streams import stream

__all__ = [
    "CollisionPattern",
    "ParentMap",
    "GapProfile",
    "all_pairs",
    "count_patterns",
    "enumerate_patterns",
    "sample_pattern",
    "parent_map",
    "gap_profile",
    "canonical_patterns",
    "EnumerationCapError",
]

# full enumeration is refused above this many patterns; use sample_pattern
ENUMERATION_CAP = 10**7


class EnumerationCapError(ValueError):
    """Pattern count exceeds the enumeration cap; sampling is the fallback."""


@dataclass(frozen=True)
class CollisionPattern:
    """Sequence of colliding pairs; ``pairs`` is empty for the m = 0 pattern."""

    h: int
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.h < 1:
            raise ValueError(f"need h >= 1 walkers, got {self.h}")
        for k, (i, j) in enumerate(self.pairs):
            if not (1 <= i < j <= self.h):
                raise ValueError(f"pair {(i, j)} invalid for h={self.h}")
            if k > 0 and self.pairs[k - 1] == (i, j):
                raise ValueError(f"consecutive repeated pair {(i, j)} at position {k}")

    @property
    def m(self) -> int:
        return len(self.pairs)

    def walkers_used(self) -> tuple[int, ...]:
        return tuple(sorted({w for p in self.pairs for w in p}))


@dataclass(frozen=True)
class ParentMap:
    """1-based parent streak indices per streak; 0 means the origin."""

    p_i: tuple[int, ...]
    p_j: tuple[int, ...]

    def zero_count(self) -> int:
        return sum(1 for p in self.p_i if p == 0) + sum(1 for p in self.p_j if p == 0)

    def total_jump(self) -> int:
        m = len(self.p_i)
        return sum(r - p for r, p in zip(range(1, m + 1), self.p_i)) + \
            sum(r - p for r, p in zip(range(1, m + 1), self.p_j))


@dataclass(frozen=True)
class GapProfile:
    """A/B split of streak indices and the sorted multiset of parent gaps."""

    set_a: frozenset[int]
    set_b: frozenset[int]
    eta: int
    gaps_sorted: tuple[int, ...]

    def top_gap_product(self, m: int) -> int:
        k = math.ceil(m / 2)
        prod = 1
        for g in self.gaps_sorted[:k]:
            prod *= g
        return prod

    def amgm_ratio(self, h: int, m: int) -> float:
        """Product of the top ceil(m/2) gaps over (2h)^ceil(m/2); <= 1 always."""
        k = math.ceil(m / 2)
        return self.top_gap_product(m) / float((2 * h) ** k)


def all_pairs(h: int) -> list[tuple[int, int]]:
    """Unordered pairs from {1..h} in lexicographic order."""
    return [(i, j) for i in range(1, h + 1) for j in range(i + 1, h + 1)]


def count_patterns(h: int, m: int) -> int:
    """|Col^(h,m)| = C(h,2) * (C(h,2) - 1)^(m-1); the empty pattern counts 1."""
    if h < 1 or m < 0:
        raise ValueError(f"invalid (h, m) = ({h}, {m})")
    if m == 0:
        return 1
    n_pairs = h * (h - 1) // 2
    if n_pairs == 0:
        return 0
    return n_pairs * (n_pairs - 1) ** (m - 1)


def enumerate_patterns(h: int, m: int, cap: int = ENUMERATION_CAP) -> Iterator[CollisionPattern]:
    """All patterns in lexicographic order on the sequence of pair ranks."""
    if h < 2 or m < 1:
        raise ValueError(f"enumeration needs h >= 2 and m >= 1, got ({h}, {m})")
    total = count_patterns(h, m)
    if total > cap:
        raise EnumerationCapError(
            f"|Col^({h},{m})| = {total} exceeds the cap {cap}; use sample_pattern"
        )
    pairs = all_pairs(h)

    def rec(prefix: list[tuple[int, int]]) -> Iterator[CollisionPattern]:
        if len(prefix) == m:
            yield CollisionPattern(h, tuple(prefix))
            return
        last = prefix[-1] if prefix else None
        for p in pairs:
            if p != last:
                prefix.append(p)
                yield from rec(prefix)
                prefix.pop()

    yield from rec([])


def sample_pattern(h: int, m: int, seed, batch: int = 0) -> CollisionPattern:
    """Uniform draw from Col^(h,m).

    The first pair is uniform over the C(h,2) pairs and every later pair is
    uniform over the C(h,2) - 1 pairs differing from its predecessor, which is
    exactly uniform because the total count factorizes the same way.
    """
    if count_patterns(h, m) == 0:
        raise ValueError(f"Col^({h},{m}) is empty")
    if m == 0:
        return CollisionPattern(h, ())
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed, "diagrams", batch)
    pairs = all_pairs(h)
    n = len(pairs)
    out = [pairs[int(rng.integers(n))]]
    for _ in range(m - 1):
        k = int(rng.integers(n - 1))
        prev = pairs.index(out[-1])
        if k >= prev:
            k += 1
        out.append(pairs[k])
    return CollisionPattern(h, tuple(out))


def parent_map(pattern: CollisionPattern) -> ParentMap:
    """Latest earlier streak of each walker in each pair (0 if none)."""
    last: dict[int, int] = {}
    p_i, p_j = [], []
    for r, (i, j) in enumerate(pattern.pairs, start=1):
        p_i.append(last.get(i, 0))
        p_j.append(last.get(j, 0))
        last[i] = r
        last[j] = r
    return ParentMap(tuple(p_i), tuple(p_j))


def gap_profile(pattern: CollisionPattern) -> GapProfile:
    """A/B partition and the non-increasing multiset of gaps ``r - p``."""
    pm = parent_map(pattern)
    set_a, set_b, gaps = [], [], []
    for r in range(1, pattern.m + 1):
        pi, pj = pm.p_i[r - 1], pm.p_j[r - 1]
        if pi == pj:
            set_a.append(r)
            gaps.append(r - pi)
        else:
            set_b.append(r)
            gaps.append(r - pi)
            gaps.append(r - pj)
    gaps.sort(reverse=True)
    return GapProfile(frozenset(set_a), frozenset(set_b),
                      len(set_a) + 2 * len(set_b), tuple(gaps))


def canonical_patterns(h: int, m: int) -> Iterator[CollisionPattern]:
    """At least one representative per walker-relabeling orbit of Col^(h,m).

    Representatives label walkers by first appearance, so a pair may introduce
    the next one or two fresh labels only.  Parent maps, gap profiles, and
    every statistic built from them are invariant under relabeling, so
    exhausting these representatives exhausts the possible profiles while
    skipping most of the C(h,2) * (C(h,2)-1)^(m-1) relabelings.
    """
    if h < 2 or m < 1:
        raise ValueError(f"enumeration needs h >= 2 and m >= 1, got ({h}, {m})")

    def rec(prefix: list[tuple[int, int]], used: int) -> Iterator[CollisionPattern]:
        if len(prefix) == m:
            yield CollisionPattern(h, tuple(prefix))
            return
        last = prefix[-1] if prefix else None
        for i in range(1, used + 1):
            for j in range(i + 1, used + 1):
                if (i, j) != last:
                    prefix.append((i, j))
                    yield from rec(prefix, used)
                    prefix.pop()
        if used + 1 <= h:
            for i in range(1, used + 1):
                prefix.append((i, used + 1))
                yield from rec(prefix, used + 1)
                prefix.pop()
        if used + 2 <= h:
            prefix.append((used + 1, used + 2))
            yield from rec(prefix, used + 2)
            prefix.pop()

    yield from rec([(1, 2)], 2)
