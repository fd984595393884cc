"""Entropy and conditional mutual information in bits."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Tuple

from .dist import DomainError, TripartiteDistribution

ATOL = 1e-12


@dataclass(frozen=True)
class EntropyReport:
    value_bits: float
    exact_atom_multiset: Tuple[Fraction, ...]


def entropy(atoms: Iterable[Fraction]) -> float:
    return -sum(float(p) * math.log2(p) for p in atoms if p > 0)


def entropy_report(atoms: Iterable[Fraction]) -> EntropyReport:
    atoms = tuple(sorted(Fraction(a) for a in atoms))
    return EntropyReport(entropy(atoms), atoms)


def binary_entropy(lam) -> float:
    lam = Fraction(lam)
    if not 0 <= lam <= 1:
        raise DomainError(f"binary entropy needs 0 <= lambda <= 1, got {lam}")
    return entropy((lam, 1 - lam))


def _marginal_entropy(cell: Dict[Tuple[int, int], Fraction], axis: int) -> float:
    m: Dict[int, Fraction] = {}
    for k, p in cell.items():
        m[k[axis]] = m.get(k[axis], 0) + p
    return entropy(m.values())


def conditional_mutual_information(d: TripartiteDistribution) -> float:
    """I(X:Y|Z) = sum_z p(z) [H(X|z) + H(Y|z) - H(XY|z)]."""
    pz = d.z_marginal()
    total = 0.0
    for z, cell in d.slices().items():
        total += float(pz[z]) * (_marginal_entropy(cell, 0) + _marginal_entropy(cell, 1) - entropy(cell.values()))
    return total


def exact_slice_entropy_profile(d: TripartiteDistribution) -> Dict[int, Counter]:
    """Multiset of conditional probabilities p(x, y | z) for every z."""
    return {z: Counter(cell.values()) for z, cell in d.slices().items()}
