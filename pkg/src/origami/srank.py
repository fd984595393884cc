"""Secrecy rank: the largest per-slice nonnegative rank.

The nonnegative rank of a small rational matrix is bracketed by two lower
bounds (rank over the rationals, minimum rectangle cover of the support) and
upper bounds given by explicit exact decompositions. When the bracket closes
within the cap the value is exact; otherwise the answer is "exceeds cap".
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .dist import DomainError, TripartiteDistribution

MAX_CAP = 6
EXCEEDS_CAP = "exceeds cap"

Matrix = Tuple[Tuple[Fraction, ...], ...]


@dataclass(frozen=True)
class SliceMatrix:
    """Rows are Bob's values y, columns Alice's values x."""

    rows: int
    cols: int
    entries: Matrix

    def __post_init__(self):
        entries = tuple(tuple(Fraction(v) for v in row) for row in self.entries)
        if len(entries) != self.rows or any(len(r) != self.cols for r in entries):
            raise DomainError("entries do not match declared shape")
        if any(v < 0 for r in entries for v in r):
            raise DomainError("negative entry")
        if sum(v for r in entries for v in r) != 1:
            raise DomainError("slice entries must sum to 1")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "SliceMatrix":
        rows = [[Fraction(v) for v in r] for r in rows]
        return cls(len(rows), len(rows[0]), tuple(map(tuple, rows)))

    @classmethod
    def from_slice(cls, d: TripartiteDistribution, z: int) -> "SliceMatrix":
        m = [[Fraction(0)] * d.x_size for _ in range(d.y_size)]
        for (x, y), p in d.slice(z).items():
            m[y][x] = p
        return cls(d.y_size, d.x_size, tuple(map(tuple, m)))


@dataclass(frozen=True)
class NonnegDecomposition:
    """Mixture of product distributions: sum_k w_k row_k col_k^T."""

    components: Tuple[Tuple[Fraction, Tuple[Fraction, ...], Tuple[Fraction, ...]], ...]

    def __len__(self):
        return len(self.components)

    def reconstruct(self, rows: int, cols: int) -> List[List[Fraction]]:
        out = [[Fraction(0)] * cols for _ in range(rows)]
        for w, r, c in self.components:
            for i in range(rows):
                if r[i]:
                    for j in range(cols):
                        out[i][j] += w * r[i] * c[j]
        return out


@dataclass(frozen=True)
class NonnegRankResult:
    value: Optional[int]
    lower: int
    upper: int
    decomposition: Optional[NonnegDecomposition]

    @property
    def status(self) -> str:
        return "exact" if self.value is not None else EXCEEDS_CAP


# --------------------------------------------------------------------------
# exact linear algebra


def linear_rank(entries: Sequence[Sequence[Fraction]]) -> int:
    m = [list(map(Fraction, r)) for r in entries]
    if not m:
        return 0
    rank, cols = 0, len(m[0])
    for c in range(cols):
        pivot = next((i for i in range(rank, len(m)) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        for i in range(rank + 1, len(m)):
            if m[i][c]:
                f = m[i][c] / m[rank][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        rank += 1
    return rank


def _trim(entries: Matrix):
    rows = [i for i, r in enumerate(entries) if any(r)]
    cols = [j for j in range(len(entries[0])) if any(r[j] for r in entries)]
    return [[entries[i][j] for j in cols] for i in rows], rows, cols


def _outer(col: Sequence[Fraction], row: Sequence[Fraction]):
    """Normalize a rank-one term into (weight, row_dist, col_dist)."""
    a, b = sum(col), sum(row)
    return (a * b, tuple(v / a for v in col), tuple(v / b for v in row))


def _trivial_decomposition(m: List[List[Fraction]]):
    n_rows, n_cols = len(m), len(m[0])
    comps = []
    if n_rows <= n_cols:
        for i in range(n_rows):
            col = [Fraction(int(k == i)) for k in range(n_rows)]
            comps.append(_outer(col, m[i]))
    else:
        for j in range(n_cols):
            row = [Fraction(int(k == j)) for k in range(n_cols)]
            comps.append(_outer([m[i][j] for i in range(n_rows)], row))
    return comps


def _rank_two_decomposition(m: List[List[Fraction]]):
    """Exact two-term factorization of a nonnegative rank-2 matrix.

    Every column lies in the two-dimensional cone spanned by the two extreme
    columns; writing each column in that pair gives nonnegative coefficients.
    """
    cols = [[m[i][j] for i in range(len(m))] for j in range(len(m[0]))]
    a = cols[0]
    b = next(c for c in cols[1:] if linear_rank([a, c]) == 2)
    i0, i1 = next((i, k) for i, k in itertools.combinations(range(len(a)), 2) if a[i] * b[k] - a[k] * b[i] != 0)
    det = a[i0] * b[i1] - a[i1] * b[i0]

    def coords(c):
        return ((c[i0] * b[i1] - c[i1] * b[i0]) / det, (a[i0] * c[i1] - a[i1] * c[i0]) / det)

    pts = [coords(c) for c in cols]

    def cross(u, v):
        return u[0] * v[1] - u[1] * v[0]

    lo = next(j for j, u in enumerate(pts) if all(cross(u, v) >= 0 for v in pts))
    hi = next(j for j, w in enumerate(pts) if all(cross(v, w) >= 0 for v in pts))
    u, w = pts[lo], pts[hi]
    det2 = cross(u, w)
    h_u, h_w = [], []
    for v in pts:
        h_u.append(cross(v, w) / det2)
        h_w.append(cross(u, v) / det2)
    return [_outer(cols[lo], h_u), _outer(cols[hi], h_w)]


# --------------------------------------------------------------------------
# rectangle covers


def maximal_rectangles(support: List[List[bool]], limit: int = 14):
    """All maximal all-positive combinatorial rectangles (row set, col set)."""
    n_rows, n_cols = len(support), len(support[0])
    transpose = n_rows > n_cols
    if transpose:
        support = [list(r) for r in zip(*support)]
        n_rows, n_cols = n_cols, n_rows
    if n_rows > limit:
        return None
    rects = set()
    for k in range(1, n_rows + 1):
        for rows in itertools.combinations(range(n_rows), k):
            cols = tuple(j for j in range(n_cols) if all(support[i][j] for i in rows))
            if not cols:
                continue
            closure = tuple(i for i in range(n_rows) if all(support[i][j] for j in cols))
            if closure == rows:
                rects.add((rows, cols))
    if transpose:
        rects = {(c, r) for r, c in rects}
    return sorted(rects)


def _exact_cover_size(cells, rects, cap, budget):
    """Smallest k <= cap such that k rectangles cover ``cells``; None if none."""
    containing = {cell: [i for i, r in enumerate(rects) if cell in r] for cell in cells}
    best = [cap + 1]
    nodes = [0]

    def rec(uncovered, used):
        nodes[0] += 1
        if nodes[0] > budget:
            raise _Budget
        if not uncovered:
            best[0] = min(best[0], used)
            return
        if used + 1 >= best[0]:
            return
        cell = min(uncovered, key=lambda c: len(containing[c]))
        for i in containing[cell]:
            rec(uncovered - rects[i], used + 1)

    rec(frozenset(cells), 0)
    return best[0] if best[0] <= cap else None


class _Budget(Exception):
    pass


def rectangle_cover_number(support: List[List[bool]], cap: int, budget: int = 100_000):
    """Minimum rectangle cover size, ``cap + 1`` if larger, None if unknown."""
    rects = maximal_rectangles(support)
    if rects is None:
        return None
    cells = {(i, j) for i, r in enumerate(support) for j, v in enumerate(r) if v}
    rect_cells = [frozenset((i, j) for i in rs for j in cs) for rs, cs in rects]
    try:
        found = _exact_cover_size(cells, rect_cells, cap, budget)
    except _Budget:
        return None
    return cap + 1 if found is None else found


def _partition_decomposition(m: List[List[Fraction]], k: int, budget: int = 50_000):
    """Look for k disjoint rank-one blocks tiling the support exactly."""
    n_rows, n_cols = len(m), len(m[0])
    if n_rows > 10:
        return None
    blocks = set()
    for size in range(1, n_rows + 1):
        for rows in itertools.combinations(range(n_rows), size):
            cols = [j for j in range(n_cols) if all(m[i][j] > 0 for i in rows)]
            classes: Dict[tuple, list] = {}
            for j in cols:
                s = sum(m[i][j] for i in rows)
                classes.setdefault(tuple(m[i][j] / s for i in rows), []).append(j)
            for group in classes.values():
                blocks.add(frozenset((i, j) for i in rows for j in group))
    cells = frozenset((i, j) for i in range(n_rows) for j in range(n_cols) if m[i][j] > 0)
    blocks = sorted(blocks, key=lambda b: (-len(b), sorted(b)))
    nodes = [0]

    def rec(uncovered, chosen):
        nodes[0] += 1
        if nodes[0] > budget:
            return None
        if not uncovered:
            return list(chosen)
        if len(chosen) == k:
            return None
        cell = min(uncovered)
        for b in blocks:
            if cell in b and b <= uncovered:
                found = rec(uncovered - b, chosen + [b])
                if found is not None:
                    return found
        return None

    tiles = rec(cells, [])
    if tiles is None:
        return None
    comps = []
    for tile in tiles:
        rows = sorted({i for i, _ in tile})
        cols = sorted({j for _, j in tile})
        i0 = rows[0]
        col = [m[i][cols[0]] / m[i0][cols[0]] if i in rows else Fraction(0) for i in range(n_rows)]
        row = [m[i0][j] if j in cols else Fraction(0) for j in range(n_cols)]
        comps.append(_outer(col, row))
    return comps


def _lift(comps, rows, cols, n_rows, n_cols) -> NonnegDecomposition:
    out = []
    for w, r, c in comps:
        full_r = [Fraction(0)] * n_rows
        full_c = [Fraction(0)] * n_cols
        for k, i in enumerate(rows):
            full_r[i] = r[k]
        for k, j in enumerate(cols):
            full_c[j] = c[k]
        out.append((w, tuple(full_r), tuple(full_c)))
    return NonnegDecomposition(tuple(out))


def nonnegative_rank_result(m: SliceMatrix, cap: int = MAX_CAP) -> NonnegRankResult:
    if not 1 <= cap <= MAX_CAP:
        raise DomainError(f"cap must be in 1..{MAX_CAP}")
    core, rows, cols = _trim(m.entries)

    def done(value, comps, lower, upper):
        dec = _lift(comps, rows, cols, m.rows, m.cols) if comps is not None else None
        if dec is not None and dec.reconstruct(m.rows, m.cols) != [list(r) for r in m.entries]:
            raise AssertionError("decomposition does not reproduce the matrix")
        return NonnegRankResult(value, lower, upper, dec)

    rank = linear_rank(core)
    if rank == 1:
        col = [sum(r) for r in core]
        row = [core[0][j] / col[0] for j in range(len(core[0]))]
        return done(1, [_outer(col, row)], 1, 1)
    if rank == 2:
        return done(2, _rank_two_decomposition(core), 2, 2)

    upper_comps = _trivial_decomposition(core)
    upper = len(upper_comps)
    support = [[v > 0 for v in r] for r in core]
    cover = rectangle_cover_number(support, min(cap, upper))
    lower = max(rank, cover if cover is not None else 0)
    if lower > cap:
        return done(None, None, lower, upper)
    if lower >= upper:
        return done(upper, upper_comps, upper, upper)
    comps = _partition_decomposition(core, lower)
    if comps is not None:
        return done(lower, comps, lower, lower)
    # the gap between the bounds cannot be closed exactly
    return done(None, upper_comps, lower, upper)


def nonnegative_rank(m: SliceMatrix, cap: int = MAX_CAP):
    """Exact nonnegative rank, or ``EXCEEDS_CAP`` when it cannot be pinned."""
    res = nonnegative_rank_result(m, cap)
    return res.value if res.value is not None else EXCEEDS_CAP


def slice_ranks(d: TripartiteDistribution, cap: int = MAX_CAP) -> Dict[int, object]:
    return {z: nonnegative_rank(SliceMatrix.from_slice(d, z), cap) for z in d.slices()}


def secrecy_rank(d: TripartiteDistribution, cap: int = MAX_CAP):
    ranks = list(slice_ranks(d, cap).values())
    if any(r == EXCEEDS_CAP for r in ranks):
        return EXCEEDS_CAP
    return max(ranks)


# --------------------------------------------------------------------------
# monotonicity under a single public message


@dataclass
class TrialVerdict:
    verdict: str
    prior: object
    posterior: Dict[int, object] = field(default_factory=dict)


def announce(d: TripartiteDistribution, channel: Sequence[Sequence[Fraction]], party: str = "A"):
    """Joint law after one public message: {m: (conditioned distribution, P(M=m))}."""
    axis = {"A": 0, "B": 1}[party]
    size = d.x_size if axis == 0 else d.y_size
    if len(channel) != size:
        raise DomainError(f"channel has {len(channel)} rows, announcer alphabet has {size}")
    n_msg = len(channel[0])
    for row in channel:
        if len(row) != n_msg or any(Fraction(v) < 0 for v in row) or sum(map(Fraction, row)) != 1:
            raise DomainError("channel is not row-stochastic")
    out = {}
    for msg in range(n_msg):
        ev = {e: p * Fraction(channel[e[axis]][msg]) for e, p in d.events.items()}
        ev = {e: p for e, p in ev.items() if p > 0}
        mass = sum(ev.values(), Fraction(0))
        if mass:
            out[msg] = (TripartiteDistribution(d.x_size, d.y_size, d.z_size, {e: p / mass for e, p in ev.items()}), mass)
    return out


def slopc_monotone_trial(d: TripartiteDistribution, channel, party: str = "A", cap: int = MAX_CAP) -> TrialVerdict:
    """PASS iff no message value raises the secrecy rank."""
    if len(channel[0]) > 4:
        raise DomainError("message alphabet larger than 4")
    prior = secrecy_rank(d, cap)
    post = {m: secrecy_rank(dm, cap) for m, (dm, _) in announce(d, channel, party).items()}
    if prior == EXCEEDS_CAP or EXCEEDS_CAP in post.values():
        return TrialVerdict("INCONCLUSIVE", prior, post)
    ok = all(r <= prior for r in post.values())
    return TrialVerdict("PASS" if ok else "FAIL", prior, post)


@dataclass(frozen=True)
class SuiteConfig:
    trials: int = 1000
    seed: int = 0
    x_size: int = 3
    y_size: int = 3
    z_size: int = 3
    msg_size: object = (2, 4)
    max_weight: int = 4

    @classmethod
    def from_json(cls, text: str) -> "SuiteConfig":
        obj = json.loads(text)
        if isinstance(obj.get("msg_size"), list):
            obj["msg_size"] = tuple(obj["msg_size"])
        return cls(**obj)

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        if isinstance(out["msg_size"], tuple):
            out["msg_size"] = list(out["msg_size"])
        return out


def random_distribution(rng: random.Random, sizes, max_weight: int = 4) -> TripartiteDistribution:
    xs, ys, zs = sizes
    while True:
        w = {(x, y, z): rng.randint(0, max_weight) for x in range(xs) for y in range(ys) for z in range(zs)}
        total = sum(w.values())
        if total:
            return TripartiteDistribution(xs, ys, zs, {e: Fraction(v, total) for e, v in w.items() if v})


def random_channel(rng: random.Random, n_values: int, n_msgs: int, max_weight: int = 3):
    rows = []
    for _ in range(n_values):
        while True:
            w = [rng.randint(0, max_weight) for _ in range(n_msgs)]
            if sum(w):
                break
        rows.append([Fraction(v, sum(w)) for v in w])
    return rows


def monotone_suite(cfg: SuiteConfig, cap: int = MAX_CAP) -> dict:
    """Seeded Monte-Carlo check of per-message rank non-increase."""
    sizes = (cfg.x_size, cfg.y_size, cfg.z_size)
    msgs = cfg.msg_size if isinstance(cfg.msg_size, (tuple, list)) else (cfg.msg_size,)
    counts = {"PASS": 0, "FAIL": 0, "INCONCLUSIVE": 0}
    failures = []
    for i in range(cfg.trials):
        rng = random.Random(f"{cfg.seed}/{i}")
        d = random_distribution(rng, sizes, cfg.max_weight)
        party = rng.choice("AB")
        n_msg = msgs[i % len(msgs)]
        channel = random_channel(rng, sizes[0] if party == "A" else sizes[1], n_msg)
        t = slopc_monotone_trial(d, channel, party, cap)
        counts[t.verdict] += 1
        if t.verdict == "FAIL":
            failures.append({"trial": i, "prior": t.prior, "posterior": t.posterior})
    verdict = "FAIL" if counts["FAIL"] else ("INCONCLUSIVE" if counts["INCONCLUSIVE"] else "PASS")
    return {"config": cfg.to_dict(), "counts": counts, "violations": failures, "verdict": verdict}
