"""Exact tripartite distributions and the recursive origami construction.

Probabilities are :class:`fractions.Fraction` throughout. Only events of
positive probability are stored; the stored key set *is* the support.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, Mapping, Optional, Tuple

Rational = Fraction
Event = Tuple[int, int, int]


class DomainError(ValueError):
    """Raised when an operation is called outside its domain."""


def parse_fraction(text) -> Fraction:
    """Parse ``"num/den"`` (or an integer string) into a reduced Fraction.

    Floats are refused on purpose so every probability stays exact.
    """
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str):
        raise DomainError(f"expected a fraction string, got {text!r}")
    s = text.strip()
    num, sep, den = s.partition("/")
    try:
        n = int(num)
        d = int(den) if sep else 1
    except ValueError:
        raise DomainError(f"malformed fraction {text!r}") from None
    if d == 0:
        raise DomainError(f"zero denominator in {text!r}")
    return Fraction(n, d)


def check_bias(lam: Fraction, name: str = "bias") -> Fraction:
    lam = Fraction(lam)
    if not (0 < lam <= Fraction(1, 2)):
        raise DomainError(f"{name} must lie in (0, 1/2], got {lam}")
    return lam


@dataclass(frozen=True)
class TripartiteDistribution:
    """Sparse joint pmf of (X, Y, Z) with exact probabilities."""

    x_size: int
    y_size: int
    z_size: int
    events: Mapping[Event, Fraction] = field(repr=False)

    def __post_init__(self):
        for name in ("x_size", "y_size", "z_size"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be positive")
        events = dict(self.events)
        total = Fraction(0)
        for (x, y, z), p in events.items():
            if not (0 <= x < self.x_size and 0 <= y < self.y_size and 0 <= z < self.z_size):
                raise DomainError(f"event {(x, y, z)} outside alphabets")
            if p <= 0:
                raise DomainError(f"zero event {(x, y, z)}: only positive probabilities are stored")
            total += p
        if total != 1:
            raise DomainError(f"probabilities sum to {total}, not 1")
        object.__setattr__(self, "events", events)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.x_size, self.y_size, self.z_size)

    def __len__(self):
        return len(self.events)

    def marginal(self, axes: str) -> Dict[tuple, Fraction]:
        """Marginal over a subset of ``"xyz"``, e.g. ``d.marginal("z")``."""
        idx = ["xyz".index(a) for a in axes]
        out: Dict[tuple, Fraction] = {}
        for e, p in self.events.items():
            key = tuple(e[i] for i in idx)
            out[key] = out.get(key, 0) + p
        return out

    def z_marginal(self) -> Dict[int, Fraction]:
        return {k[0]: v for k, v in self.marginal("z").items()}

    def slice(self, z: int) -> Dict[Tuple[int, int], Fraction]:
        """Conditional pmf p(x, y | z) as a dict on its support."""
        cell = {(x, y): p for (x, y, zz), p in self.events.items() if zz == z}
        mass = sum(cell.values())
        if mass == 0:
            raise DomainError(f"z={z} has zero probability")
        return {k: v / mass for k, v in cell.items()}

    def slices(self) -> Dict[int, Dict[Tuple[int, int], Fraction]]:
        grouped: Dict[int, Dict[Tuple[int, int], Fraction]] = {}
        for (x, y, z), p in self.events.items():
            grouped.setdefault(z, {})[(x, y)] = p
        out = {}
        for z in sorted(grouped):
            mass = sum(grouped[z].values())
            out[z] = {k: v / mass for k, v in grouped[z].items()}
        return out

    def support_values(self, axis: str) -> list:
        i = "xyz".index(axis)
        return sorted({e[i] for e in self.events})


@dataclass(frozen=True)
class OrigamiParams:
    rounds: int
    bias: Fraction

    def __post_init__(self):
        if self.rounds < 1:
            raise DomainError("rounds must be a positive integer")
        object.__setattr__(self, "bias", check_bias(self.bias))


@dataclass(frozen=True)
class Relabeling:
    """Bijections between the supports of two distributions.

    Each map sends a value used by the source to a value used by the target.
    """

    x_perm: Mapping[int, int]
    y_perm: Mapping[int, int]
    z_perm: Mapping[int, int]

    def __post_init__(self):
        for name in ("x_perm", "y_perm", "z_perm"):
            m = getattr(self, name)
            if len(set(m.values())) != len(m):
                raise DomainError(f"{name} is not injective")

    def apply(self, d: TripartiteDistribution, shape: Optional[Tuple[int, int, int]] = None) -> TripartiteDistribution:
        xs, ys, zs = shape or d.shape
        events = {(self.x_perm[x], self.y_perm[y], self.z_perm[z]): p for (x, y, z), p in d.events.items()}
        return TripartiteDistribution(xs, ys, zs, events)

    def carries(self, d1: TripartiteDistribution, d2: TripartiteDistribution) -> bool:
        """True iff this relabeling maps d1 onto d2 event by event."""
        if len(d1) != len(d2):
            return False
        try:
            for (x, y, z), p in d1.events.items():
                if d2.events.get((self.x_perm[x], self.y_perm[y], self.z_perm[z])) != p:
                    return False
        except KeyError:
            return False
        return True


@dataclass(frozen=True)
class Undecided:
    """Returned by :func:`find_relabeling` when the search is out of budget."""

    reason: str


# --------------------------------------------------------------------------
# construction


# (x, y) -> z for the four-by-four base grid; rows are y, columns are x.
_BASE_GRID = {
    (0, 0): 0, (3, 0): 1,
    (1, 1): 0, (2, 1): 1,
    (0, 2): 2, (1, 2): 3,
    (2, 3): 3, (3, 3): 2,
}


def _weight(x: int, lam: Fraction) -> Fraction:
    return lam if x % 2 == 0 else 1 - lam


def build_base(lam) -> TripartiteDistribution:
    """The 4x4x4 one-round origami distribution."""
    lam = check_bias(lam)
    events = {(x, y, z): _weight(x, lam) / 4 for (x, y), z in _BASE_GRID.items()}
    return TripartiteDistribution(4, 4, 4, events)


def origami_block0(lam) -> TripartiteDistribution:
    """Terminal 4x2x2 block: the top half of the base grid, renormalized.

    It is what remains after a complete key-extraction schedule and serves as
    the zero-round member of the family when checking one-round reductions.
    """
    lam = check_bias(lam)
    events = {(x, y, z): _weight(x, lam) / 2 for (x, y), z in _BASE_GRID.items() if y < 2}
    return TripartiteDistribution(4, 2, 2, events)


def origami_sizes(n: int) -> Tuple[int, int, int]:
    """Alphabet sizes (x, y, z) of the n-round origami distribution, n >= 0."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    return (2 ** (n // 2 + 2), 2 ** ((n + 1) // 2 + 1), 2 ** (n + 1))


def _swap_shift(n: int) -> int:
    return 2 ** (n // 2 + 1)


def overline_permutations(n: int) -> Tuple[Dict[int, int], Dict[int, int]]:
    """Row/column involutions used by the overline transform at level n.

    Odd n swaps rows (y) i <-> i + 2^(floor(n/2)+1) for odd i; even n does the
    same on columns (x). Returns full-alphabet (x_perm, y_perm).
    """
    xs, ys, _ = origami_sizes(n)
    k = _swap_shift(n)
    x_perm = {x: x for x in range(xs)}
    y_perm = {y: y for y in range(ys)}
    perm = y_perm if n % 2 == 1 else x_perm
    for i in range(1, k, 2):
        perm[i], perm[i + k] = i + k, i
    return x_perm, y_perm


def overline_transform(d: TripartiteDistribution, n: int) -> TripartiteDistribution:
    """Swap rows (odd n) or columns (even n) and move Eve's values up a block.

    The z-offset equals the z-alphabet size of ``d`` so that the two halves of
    the next level use disjoint z-values. The result has a doubled z-alphabet
    whose lower half is unused.
    """
    if d.shape != origami_sizes(n):
        raise DomainError(f"shape {d.shape} does not match level {n} sizes {origami_sizes(n)}")
    x_perm, y_perm = overline_permutations(n)
    off = d.z_size
    events = {(x_perm[x], y_perm[y], z + off): p for (x, y, z), p in d.events.items()}
    return TripartiteDistribution(d.x_size, d.y_size, 2 * d.z_size, events)


def _stack(d: TripartiteDistribution, n: int) -> TripartiteDistribution:
    """Level n+1 from level n: side-by-side for even n+1, stacked for odd."""
    over = overline_transform(d, n)
    half = Fraction(1, 2)
    events = {e: p * half for e, p in d.events.items()}
    if (n + 1) % 2 == 0:
        for (x, y, z), p in over.events.items():
            events[(x + d.x_size, y, z)] = p * half
    else:
        for (x, y, z), p in over.events.items():
            events[(x, y + d.y_size, z)] = p * half
    return TripartiteDistribution(*origami_sizes(n + 1), events)


def build_origami(p: OrigamiParams) -> TripartiteDistribution:
    d = build_base(p.bias)
    for n in range(1, p.rounds):
        d = _stack(d, n)
    return d


def origami(rounds: int, lam) -> TripartiteDistribution:
    """Shorthand for ``build_origami``; ``rounds == 0`` gives the terminal block."""
    if rounds == 0:
        return origami_block0(lam)
    return build_origami(OrigamiParams(rounds, Fraction(lam)))


# --------------------------------------------------------------------------
# conditioning and compaction


def condition(d: TripartiteDistribution, constraint: Callable[[int, int, int], bool]):
    """Condition on ``constraint(x, y, z)``; return (distribution, mass)."""
    kept = {e: p for e, p in d.events.items() if constraint(*e)}
    mass = sum(kept.values(), Fraction(0))
    if mass == 0:
        raise DomainError("constraint set has zero probability")
    return TripartiteDistribution(d.x_size, d.y_size, d.z_size, {e: p / mass for e, p in kept.items()}), mass


def compact(d: TripartiteDistribution):
    """Drop unused values, relabeling survivors in increasing order.

    Returns the compacted distribution and the order-preserving maps
    (x_map, y_map, z_map) from old to new labels.
    """
    maps = []
    for axis in "xyz":
        maps.append({v: i for i, v in enumerate(d.support_values(axis))})
    xm, ym, zm = maps
    events = {(xm[x], ym[y], zm[z]): p for (x, y, z), p in d.events.items()}
    return TripartiteDistribution(len(xm), len(ym), len(zm), events), (xm, ym, zm)


# --------------------------------------------------------------------------
# relabeling search


def _invert(m: Mapping[int, int]) -> Dict[int, int]:
    return {v: k for k, v in m.items()}


def _compose(*maps: Mapping[int, int]) -> Dict[int, int]:
    out = {}
    for k in maps[0]:
        v = k
        for m in maps:
            v = m[v]
        out[k] = v
    return out


def _origami_level(d: TripartiteDistribution) -> Optional[Tuple[int, Fraction]]:
    """Recognize a compact distribution equal to some origami level."""
    z = d.z_size
    n = z.bit_length() - 2
    if n < 0 or 2 ** (n + 1) != z or d.shape != origami_sizes(n):
        return None
    weights = {p for s in d.slices().values() for p in s.values()}
    lam = min(weights)
    if lam > Fraction(1, 2):
        return None
    try:
        candidate = origami(n, lam)
    except DomainError:
        return None
    return (n, lam) if candidate == d else None


def _colour_refine(d1: TripartiteDistribution, d2: TripartiteDistribution):
    """Joint colour refinement of the values of two distributions.

    Colours start from (axis, degree, sorted incident probabilities) and are
    refined by the colours of neighbours across events until stable.
    """
    dists = (d1, d2)
    colours = []
    for d in dists:
        c = {}
        for axis in range(3):
            inc: Dict[int, list] = {}
            for e, p in d.events.items():
                inc.setdefault(e[axis], []).append(p)
            for v, ps in inc.items():
                c[(axis, v)] = (axis, len(ps), tuple(sorted(ps)))
        colours.append(c)
    n_classes = -1
    while True:
        table = {}
        for c in colours:
            for sig in c.values():
                table.setdefault(sig, None)
        ids = {sig: i for i, sig in enumerate(sorted(table, key=repr))}
        colours = [{k: ids[s] for k, s in c.items()} for c in colours]
        count = len(ids)
        if count == n_classes:
            return colours
        n_classes = count
        new = []
        for d, c in zip(dists, colours):
            inc: Dict[Tuple[int, int], list] = {}
            for (x, y, z), p in d.events.items():
                cx, cy, cz = c[(0, x)], c[(1, y)], c[(2, z)]
                inc.setdefault((0, x), []).append((p, cy, cz))
                inc.setdefault((1, y), []).append((p, cx, cz))
                inc.setdefault((2, z), []).append((p, cx, cy))
            new.append({k: (c[k], tuple(sorted(v))) for k, v in inc.items()})
        colours = new


def _search_relabeling(d1, d2, budget: int):
    c1, c2 = _colour_refine(d1, d2)
    if sorted(c1.values()) != sorted(c2.values()):
        return None
    if sorted(d1.events.values()) != sorted(d2.events.values()):
        return None

    # order d1's events so that every event after the first of its connected
    # component shares a value with an earlier one
    by_val: Dict[Tuple[int, int], list] = {}
    for e in d1.events:
        for axis in range(3):
            by_val.setdefault((axis, e[axis]), []).append(e)
    order, seen = [], set()
    for start in sorted(d1.events):
        if start in seen:
            continue
        seen.add(start)
        queue = deque([start])
        while queue:
            e = queue.popleft()
            order.append(e)
            for axis in range(3):
                for f in sorted(by_val[(axis, e[axis])]):
                    if f not in seen:
                        seen.add(f)
                        queue.append(f)

    idx2: Dict[Tuple[int, int], list] = {}
    for e in d2.events:
        for axis in range(3):
            idx2.setdefault((axis, e[axis]), []).append(e)
    all2 = sorted(d2.events)
    maps = [dict(), dict(), dict()]
    used = [set(), set(), set()]
    nodes = 0

    def candidates(e):
        for axis in range(3):
            if e[axis] in maps[axis]:
                return sorted(idx2.get((axis, maps[axis][e[axis]]), ()))
        return all2

    def rec(i):
        nonlocal nodes
        if i == len(order):
            return True
        nodes += 1
        if nodes > budget:
            raise _Budget
        e = order[i]
        p = d1.events[e]
        for f in candidates(e):
            if d2.events[f] != p:
                continue
            ok = True
            added = []
            for axis in range(3):
                a, b = e[axis], f[axis]
                if a in maps[axis]:
                    if maps[axis][a] != b:
                        ok = False
                        break
                elif b in used[axis] or c1[(axis, a)] != c2[(axis, b)]:
                    ok = False
                    break
                else:
                    maps[axis][a] = b
                    used[axis].add(b)
                    added.append(axis)
            if ok and rec(i + 1):
                return True
            for axis in added:
                used[axis].discard(maps[axis].pop(e[axis]))
        return False

    if rec(0):
        return Relabeling(dict(maps[0]), dict(maps[1]), dict(maps[2]))
    return None


class _Budget(Exception):
    pass


SEARCH_LIMIT = 16


def find_relabeling(d1: TripartiteDistribution, d2: TripartiteDistribution, budget: int = 200_000):
    """Find value bijections carrying d1 onto d2.

    Returns a :class:`Relabeling`, ``None`` when the two are provably not
    equivalent, or :class:`Undecided` when neither the structured route nor
    the bounded generic search can settle it.
    """
    if len(d1) != len(d2) or sorted(d1.events.values()) != sorted(d2.events.values()):
        return None
    k1, (xm1, ym1, zm1) = compact(d1)
    k2, (xm2, ym2, zm2) = compact(d2)
    back = [_invert(xm2), _invert(ym2), _invert(zm2)]

    def lift(px, py, pz):
        return Relabeling(_compose(xm1, px, back[0]), _compose(ym1, py, back[1]), _compose(zm1, pz, back[2]))

    ident = [{v: v for v in range(s)} for s in k1.shape]
    if k1 == k2:
        return lift(*ident)

    # structured route: one side is an origami level, the other its overline
    for a, b, flip in ((k2, k1, False), (k1, k2, True)):
        level = _origami_level(a)
        if level is None:
            continue
        n, _ = level
        over, _ = compact(overline_transform(a, n))
        if over == b:
            xp, yp = overline_permutations(n)
            # the z-shift is undone by compaction, swaps are involutions
            rel = lift(xp, yp, ident[2]) if k1.shape == k2.shape else None
            if rel is not None and rel.carries(d1, d2):
                return rel

    if max(k1.shape) > SEARCH_LIMIT or max(k2.shape) > SEARCH_LIMIT:
        return Undecided(f"alphabets {k1.shape} exceed the generic search limit {SEARCH_LIMIT}")
    try:
        found = _search_relabeling(k1, k2, budget)
    except _Budget:
        return Undecided(f"search budget of {budget} nodes exhausted")
    if found is None:
        return None
    return lift(found.x_perm, found.y_perm, found.z_perm)


def events_from_grid(grid: Iterable[Iterable[Optional[int]]]) -> Dict[Tuple[int, int], int]:
    """Read a rows-are-y grid of z-labels (None for empty) into {(x, y): z}."""
    cells = {}
    for y, row in enumerate(grid):
        for x, z in enumerate(row):
            if z is not None:
                cells[(x, y)] = z
    return cells
