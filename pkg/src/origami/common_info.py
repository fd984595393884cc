"""Maximal common functions (Gacs-Korner) as support-graph components."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Hashable, Mapping, Tuple

from .dist import DomainError, TripartiteDistribution

_AXES = {"X": 0, "Y": 1, "Z": 2}


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, a):
        self.parent.setdefault(a, a)
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


@dataclass(frozen=True)
class CommonFunction:
    """Labeled partition realizing the maximal common function of a pair.

    ``first`` and ``second`` map each value in the support of the respective
    variable to its component id, which is the smallest value of the first
    variable in that component.
    """

    pair: Tuple[str, str]
    first: Mapping[Hashable, Hashable]
    second: Mapping[Hashable, Hashable]
    component_probs: Mapping[Hashable, Fraction]

    @property
    def components(self) -> list:
        return sorted(self.component_probs)

    @property
    def n_components(self) -> int:
        return len(self.component_probs)

    @property
    def is_trivial(self) -> bool:
        return self.n_components == 1

    def index(self, component) -> int:
        """Position of a component id in canonical order (0, 1, ...)."""
        return self.components.index(component)

    def members(self) -> Dict[Hashable, Tuple[list, list]]:
        out = {c: ([], []) for c in self.components}
        for a, c in self.first.items():
            out[c][0].append(a)
        for b, c in self.second.items():
            out[c][1].append(b)
        return {c: (sorted(a), sorted(b)) for c, (a, b) in out.items()}

    def to_json(self) -> list:
        """Components as membership lists ``[[first values], [second values]]``."""
        return [[a, b] for a, b in self.members().values()]


def common_function_from_joint(joint: Mapping[Tuple[Hashable, Hashable], Fraction],
                               pair: Tuple[str, str] = ("A", "B")) -> CommonFunction:
    """Connected components of the bipartite support graph of ``joint``."""
    uf = _UnionFind()
    for (a, b), p in joint.items():
        if p > 0:
            uf.union((0, a), (1, b))
    roots: Dict[tuple, Hashable] = {}
    for (a, _b), p in joint.items():
        if p > 0:
            r = uf.find((0, a))
            if r not in roots or a < roots[r]:
                roots[r] = a
    first, second, probs = {}, {}, {}
    for (a, b), p in joint.items():
        if p <= 0:
            continue
        cid = roots[uf.find((0, a))]
        first[a] = cid
        second[b] = cid
        probs[cid] = probs.get(cid, 0) + p
    if not probs:
        raise DomainError("empty support")
    return CommonFunction(tuple(pair), first, second, probs)


def common_function(d: TripartiteDistribution, pair: Tuple[str, str] | str) -> CommonFunction:
    """Maximal common function of two of X, Y, Z, e.g. ``pair="YZ"``."""
    a, b = tuple(pair)
    i, j = _AXES[a], _AXES[b]
    joint: Dict[Tuple[int, int], Fraction] = {}
    for e, p in d.events.items():
        key = (e[i], e[j])
        joint[key] = joint.get(key, 0) + p
    return common_function_from_joint(joint, (a, b))


@dataclass(frozen=True)
class ConditionalCommonFunction:
    per_condition: Mapping[int, CommonFunction]


def conditional_common_function(d: TripartiteDistribution) -> ConditionalCommonFunction:
    """Common function of (X, Y) for every z of positive probability."""
    return ConditionalCommonFunction(
        {z: common_function_from_joint(s, ("X", "Y")) for z, s in d.slices().items()}
    )


def common_entropy(cf: CommonFunction) -> float:
    if cf.is_trivial:
        return 0.0
    return -sum(float(p) * math.log2(p) for p in cf.component_probs.values() if p > 0)


def component_bit(cf: CommonFunction, value, side: int = 0) -> int:
    """Canonical index of the component containing ``value``.

    ``side`` 0 looks up a first-variable value, 1 a second-variable value.
    """
    table = cf.first if side == 0 else cf.second
    return cf.index(table[value])
