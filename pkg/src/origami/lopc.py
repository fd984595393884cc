"""Public-discussion protocols: trees, exact branch enumeration, verifiers.

A protocol is a list of rounds. In each round one party (``"A"`` holds X,
``"B"`` holds Y) sends a message drawn from a row-stochastic channel indexed
by its own value; the channel may depend on the transcript so far. After the
last round each party outputs a bit computed from its value and the
transcript. Eve sees Z and the whole transcript.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .common_info import common_function
from .dist import DomainError, OrigamiParams, TripartiteDistribution, build_origami, check_bias
from .report import FAIL, PASS, BranchVerdict, VerificationReport, combine

Transcript = Tuple[int, ...]
ChannelMatrix = Tuple[Tuple[Fraction, ...], ...]

PARTY_AXIS = {"A": 0, "B": 1}


def transcript_label(t: Transcript) -> str:
    return "m=" + ",".join(map(str, t)) if t else "m=()"


def mandated_starter(rounds: int) -> str:
    """Bob opens odd-round schedules, Alice even ones."""
    return "B" if rounds % 2 else "A"


def _other(party: str) -> str:
    return "B" if party == "A" else "A"


def _matrix(rows) -> ChannelMatrix:
    return tuple(tuple(Fraction(v) for v in r) for r in rows)


@dataclass(frozen=True)
class Round:
    party: str
    channel: Union[ChannelMatrix, Mapping[Transcript, ChannelMatrix]]
    depends_on_transcript: bool = False

    def channel_for(self, transcript: Transcript) -> ChannelMatrix:
        if not self.depends_on_transcript:
            return self.channel
        try:
            return self.channel[transcript]
        except KeyError:
            raise DomainError(f"no channel for transcript {transcript}") from None


@dataclass(frozen=True)
class OutputMap:
    """Deterministic leaf output table: value -> bit, optionally per transcript."""

    table: Union[Tuple[int, ...], Mapping[Transcript, Tuple[int, ...]]]
    depends_on_transcript: bool = False

    def for_transcript(self, transcript: Transcript) -> Tuple[int, ...]:
        if not self.depends_on_transcript:
            return self.table
        try:
            return self.table[transcript]
        except KeyError:
            raise DomainError(f"no output table for transcript {transcript}") from None


@dataclass(frozen=True)
class ProtocolTree:
    rounds: Tuple[Round, ...]
    x_hat: OutputMap
    y_hat: OutputMap

    def __post_init__(self):
        for a, b in zip(self.rounds, self.rounds[1:]):
            if a.party == b.party:
                raise DomainError("announcing parties must alternate")
        for r in self.rounds:
            if r.party not in PARTY_AXIS:
                raise DomainError(f"unknown party {r.party!r}")

    @property
    def depth(self) -> int:
        return len(self.rounds)

    @property
    def starter(self) -> Optional[str]:
        return self.rounds[0].party if self.rounds else None


@dataclass(frozen=True)
class Branch:
    transcript: Transcript
    mass: Fraction
    posterior: TripartiteDistribution
    outputs: Optional[Mapping[Tuple[int, int, int], Fraction]] = field(default=None, repr=False)

    @property
    def label(self) -> str:
        return transcript_label(self.transcript)


def _check_stochastic(m: ChannelMatrix, size: int, where: str):
    if len(m) != size:
        raise DomainError(f"{where}: channel has {len(m)} rows, alphabet has {size}")
    width = len(m[0]) if m else 0
    for row in m:
        if len(row) != width or any(v < 0 for v in row) or sum(row) != 1:
            raise DomainError(f"{where}: channel is not row-stochastic")


def _step(branch: Branch, rnd: Round) -> List[Branch]:
    d = branch.posterior
    axis = PARTY_AXIS[rnd.party]
    size = d.x_size if axis == 0 else d.y_size
    m = rnd.channel_for(branch.transcript)
    _check_stochastic(m, size, transcript_label(branch.transcript))
    out = []
    for msg in range(len(m[0])):
        ev = {}
        for e, p in d.events.items():
            q = p * m[e[axis]][msg]
            if q:
                ev[e] = q
        mass = sum(ev.values(), Fraction(0))
        if not mass:
            continue
        post = TripartiteDistribution(d.x_size, d.y_size, d.z_size, {e: p / mass for e, p in ev.items()})
        out.append(Branch(branch.transcript + (msg,), branch.mass * mass, post))
    return out


def _with_outputs(branch: Branch, p: ProtocolTree) -> Branch:
    xs = p.x_hat.for_transcript(branch.transcript)
    ys = p.y_hat.for_transcript(branch.transcript)
    joint: Dict[Tuple[int, int, int], Fraction] = {}
    for (x, y, z), q in branch.posterior.events.items():
        key = (xs[x], ys[y], z)
        joint[key] = joint.get(key, 0) + q
    return Branch(branch.transcript, branch.mass, branch.posterior, joint)


def trace_protocol(d: TripartiteDistribution, p: ProtocolTree) -> List[List[Branch]]:
    """All branches level by level; the last level carries leaf outputs."""
    levels = [[Branch((), Fraction(1), d)]]
    for rnd in p.rounds:
        levels.append([c for b in levels[-1] for c in _step(b, rnd)])
    levels[-1] = [_with_outputs(b, p) for b in levels[-1]]
    return levels


def run_protocol(d: TripartiteDistribution, p: ProtocolTree) -> List[Branch]:
    return trace_protocol(d, p)[-1]


# --------------------------------------------------------------------------
# bias adjustment


@dataclass(frozen=True)
class BiasAdjust:
    """Public coin that turns a key of bias ``source`` into one of bias ``target``.

    The holder of key bit K announces M with P(M=0 | K=k) = ``keep[k]``; on
    M=1 both parties flip their bit.
    """

    source: Fraction
    target: Fraction
    p0: Fraction
    keep: Tuple[Fraction, Fraction]

    @property
    def is_identity(self) -> bool:
        return self.keep == (1, 1)

    @property
    def channel(self) -> ChannelMatrix:
        return tuple((q, 1 - q) for q in self.keep)


def make_bias_adjust(lam, lam_target) -> BiasAdjust:
    lam, lam_target = Fraction(lam), Fraction(lam_target)
    check_bias(lam_target, "target bias")
    check_bias(lam)
    if lam_target > lam:
        raise DomainError("target bias must not exceed the source bias")
    if lam_target == lam:
        return BiasAdjust(lam, lam_target, Fraction(1), (Fraction(1), Fraction(1)))
    p0 = (1 - lam - lam_target) / (1 - 2 * lam_target)
    return BiasAdjust(lam, lam_target, p0, (lam_target * p0 / lam, (1 - lam_target) * p0 / (1 - lam)))


# --------------------------------------------------------------------------
# the canonical achievability protocol


def _announcer_labels(post: TripartiteDistribution, party: str) -> Tuple[Dict[int, int], int]:
    """Canonical component index of each announcer value in J_(P,Z)."""
    cf = common_function(post, "XZ" if party == "A" else "YZ")
    return {v: cf.index(c) for v, c in cf.first.items()}, cf.n_components


def _key_bits(post: TripartiteDistribution) -> Tuple[Dict[int, int], Dict[int, int]]:
    """Component index of J_XY for every x and y in the support."""
    cf = common_function(post, "XY")
    return ({x: cf.index(c) for x, c in cf.first.items()}, {y: cf.index(c) for y, c in cf.second.items()})


def _restrict(post: TripartiteDistribution, axis: int, values) -> TripartiteDistribution:
    values = set(values)
    ev = {e: p for e, p in post.events.items() if e[axis] in values}
    mass = sum(ev.values())
    return TripartiteDistribution(post.x_size, post.y_size, post.z_size, {e: p / mass for e, p in ev.items()})


def make_achievability_protocol(params: OrigamiParams, target, starter: Optional[str] = None,
                                align: bool = False) -> ProtocolTree:
    """Alternating common-information announcements on ``b^(r, lambda)``.

    Each round the active party announces the canonical index of its current
    common function with Eve. The key is the index of the J_XY component in
    the final posterior. The last message also carries the bias-adjust coin.

    With ``align=True`` Alice sends one extra message: the parity of x XOR her
    key bit, after which both keys equal the parity of x (Alice's value) and
    the bias-adjust coin rides on that message instead.
    """
    lam = params.bias
    target = check_bias(Fraction(target), "target bias")
    adjust = make_bias_adjust(lam, target)
    starter = starter or mandated_starter(params.rounds)
    d = build_origami(params)
    r = params.rounds

    rounds = []
    level = [((), d)]
    party = starter
    for i in range(r):
        last = i == r - 1 and not align
        axis = PARTY_AXIS[party]
        size = d.x_size if axis == 0 else d.y_size
        channels = {}
        nxt = []
        for t, post in level:
            labels, n = _announcer_labels(post, party)
            rows = []
            if last and not adjust.is_identity:
                width = 2 * n
                for v in range(size):
                    j = labels.get(v, 0)
                    row = [Fraction(0)] * width
                    if v in labels:
                        sub = _restrict(post, axis, [u for u, l in labels.items() if l == j])
                        kx, ky = _key_bits(sub)
                        k = (kx if axis == 0 else ky)[v]
                        q = adjust.keep[k] if k < 2 else Fraction(1)
                    else:
                        q = Fraction(1)
                    row[2 * j], row[2 * j + 1] = q, 1 - q
                    rows.append(tuple(row))
            else:
                rows = [tuple(Fraction(int(m == labels.get(v, 0))) for m in range(n)) for v in range(size)]
            channels[t] = tuple(rows)
            nxt.extend((b.transcript, b.posterior) for b in _step(Branch(t, Fraction(1), post),
                                                                   Round(party, tuple(rows))))
        rounds.append(Round(party, channels, True))
        level = nxt
        party = _other(party)

    keys = {t: _key_bits(post) for t, post in level}
    if align:
        # Alice reveals parity(x) XOR key(x); on every block this is a function of z
        channels = {}
        nxt = []
        for t, post in level:
            kx, _ = keys[t]
            rows = []
            for x in range(d.x_size):
                a = (x % 2) ^ kx.get(x, 0)
                q = adjust.keep[x % 2]
                if adjust.is_identity:
                    rows.append(tuple(Fraction(int(m == a)) for m in range(2)))
                else:
                    row = [Fraction(0)] * 4
                    row[2 * a], row[2 * a + 1] = q, 1 - q
                    rows.append(tuple(row))
            channels[t] = tuple(rows)
            rnd = Round("A", tuple(rows))
            nxt.extend((b.transcript, b.posterior) for b in _step(Branch(t, Fraction(1), post), rnd))
        rounds.append(Round("A", channels, True))
        level = nxt

    x_tab, y_tab = {}, {}
    for t, post in level:
        # keys are fixed before the alignment message can split a block further
        kx, ky = keys[t[:-1]] if align else keys[t]
        last = t[-1] if t else 0
        flip = last % 2 if not adjust.is_identity else 0
        if align:
            a = last // 2 if not adjust.is_identity else last
            x_tab[t] = tuple(((x % 2) ^ flip) for x in range(d.x_size))
            y_tab[t] = tuple((ky.get(y, 0) ^ a ^ flip) for y in range(d.y_size))
        else:
            x_tab[t] = tuple((kx.get(x, 0) ^ flip) for x in range(d.x_size))
            y_tab[t] = tuple((ky.get(y, 0) ^ flip) for y in range(d.y_size))
    return ProtocolTree(tuple(rounds), OutputMap(x_tab, True), OutputMap(y_tab, True))


def announce_value_protocol(d: TripartiteDistribution, party: str = "A") -> ProtocolTree:
    """One round in which ``party`` announces its value outright."""
    size = d.x_size if party == "A" else d.y_size
    ident = tuple(tuple(Fraction(int(i == j)) for j in range(size)) for i in range(size))
    zeros = OutputMap(tuple([0] * d.x_size)), OutputMap(tuple([0] * d.y_size))
    return ProtocolTree((Round(party, ident),), *zeros)


# --------------------------------------------------------------------------
# key verifiers


def _key_stats(branch: Branch):
    """Agreement flag, P(K=0), per-z P(K=0 | z), key alphabet."""
    joint = branch.outputs
    disagree = sum((p for (a, b, _), p in joint.items() if a != b), Fraction(0))
    keys = {a for (a, b, _), p in joint.items()}
    pz: Dict[int, Fraction] = {}
    p0z: Dict[int, Fraction] = {}
    for (a, _b, z), p in joint.items():
        pz[z] = pz.get(z, 0) + p
        if a == 0:
            p0z[z] = p0z.get(z, 0) + p
    p0 = sum(p0z.values(), Fraction(0))
    cond = {z: p0z.get(z, Fraction(0)) / pz[z] for z in sorted(pz)}
    return disagree, p0, cond, keys


def verify_strict_key(branches: Sequence[Branch], target) -> VerificationReport:
    """Perfect agreement, bias ``target`` up to a transcript-chosen relabeling,
    and exact independence from Z on every branch."""
    target = Fraction(target)
    out = []
    for b in branches:
        diags = []
        disagree, p0, cond, keys = _key_stats(b)
        if disagree:
            diags.append(f"disagreement with probability {disagree} on branch {b.label}")
        if not keys <= {0, 1}:
            diags.append(f"non-binary key values {sorted(keys)} on branch {b.label}")
        relabel = None
        if p0 == target:
            relabel = "identity"
        elif 1 - p0 == target:
            relabel = "flip"
        else:
            diags.append(f"key bias {p0} not in {{{target}, {1 - target}}} on branch {b.label}")
        if any(c != p0 for c in cond.values()):
            diags.append(f"key–Z dependence on branch {b.label}")
        details = {"mass": str(b.mass), "p_key0": str(p0), "relabel": relabel}
        out.append(BranchVerdict(b.label, FAIL if diags else PASS, diags, details))
    return VerificationReport("strict-key", combine(v.verdict for v in out), out, {"target": str(target)})


def verify_blockwise_key(branches: Sequence[Branch], lam) -> VerificationReport:
    """Agreement, and for every z the key law is (lam, 1-lam) or its flip."""
    lam = Fraction(lam)
    allowed = {lam, 1 - lam}
    out = []
    for b in branches:
        diags = []
        disagree, _p0, cond, keys = _key_stats(b)
        if disagree:
            diags.append(f"disagreement with probability {disagree} on branch {b.label}")
        if not keys <= {0, 1}:
            diags.append(f"non-binary key values {sorted(keys)} on branch {b.label}")
        for z, c in cond.items():
            if c not in allowed:
                diags.append(f"key bias {c} at z={z} on branch {b.label}")
        out.append(BranchVerdict(b.label, FAIL if diags else PASS, diags, {"mass": str(b.mass)}))
    return VerificationReport("blockwise-key", combine(v.verdict for v in out), out, {"bias": str(lam)})


# --------------------------------------------------------------------------
# block-survival audit


def block_tree(rounds: int) -> List[List[frozenset]]:
    """Nested partition of Eve's alphabet: depth k has 2^k blocks of z-values.

    Depth k blocks are the z-supports of the level ``rounds - k`` pieces of
    the recursion; depth ``rounds`` blocks are the terminal pairs.
    """
    z_size = 2 ** (rounds + 1)
    out = []
    for k in range(rounds + 1):
        width = z_size >> k
        out.append([frozenset(range(j * width, (j + 1) * width)) for j in range(2 ** k)])
    return out


@dataclass
class BranchAudit:
    depth: int
    transcript: Transcript
    surviving_z: frozenset
    intact_blocks: List[int]
    rank_drops: List[int]
    block_size: int = 0

    @property
    def exact_block(self) -> bool:
        """The surviving z-values are exactly one intact block."""
        return len(self.intact_blocks) == 1 and len(self.surviving_z) == self.block_size


@dataclass
class BlockAudit:
    rounds: int
    branches: List[BranchAudit]

    @property
    def rank_drop_count(self) -> int:
        return sum(len(b.rank_drops) for b in self.branches)

    @property
    def flagged(self) -> bool:
        return self.rank_drop_count > 0

    def at_depth(self, k: int) -> List[BranchAudit]:
        return [b for b in self.branches if b.depth == k]

    def to_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "rank_drop_count": self.rank_drop_count,
            "branches": [
                {"depth": b.depth, "transcript": transcript_label(b.transcript),
                 "surviving_z": sorted(b.surviving_z), "intact_blocks": b.intact_blocks,
                 "rank_drops": b.rank_drops}
                for b in self.branches
            ],
        }


def audit_block_survival(d: TripartiteDistribution, levels: Sequence[Sequence[Branch]]) -> BlockAudit:
    """Track which recursion blocks keep every slice alive with both events."""
    r = d.z_size.bit_length() - 2
    if r < 1 or 2 ** (r + 1) != d.z_size:
        raise DomainError("input is not origami-shaped")
    tree = block_tree(r)
    original: Dict[int, set] = {}
    for (x, y, z) in d.events:
        original.setdefault(z, set()).add((x, y))
    audits = []
    for depth, level in enumerate(levels):
        blocks = tree[min(depth, r)]
        for b in level:
            alive: Dict[int, set] = {}
            for (x, y, z) in b.posterior.events:
                alive.setdefault(z, set()).add((x, y))
            drops = sorted(z for z, cells in alive.items() if len(cells) < len(original[z]))
            intact = [
                j for j, blk in enumerate(blocks)
                if all(z in alive and alive[z] == original[z] for z in blk)
            ]
            audits.append(BranchAudit(depth, b.transcript, frozenset(alive), intact, drops, len(blocks[0])))
    return BlockAudit(r, audits)


# --------------------------------------------------------------------------
# bounded one-round search


@dataclass
class SearchReport:
    starter: str
    msg_cap: int
    target: Fraction
    complete: bool
    message_functions: int
    output_maps: int
    passing: List[Tuple[Tuple[int, ...], ...]]

    def to_dict(self) -> dict:
        return {
            "starter": self.starter,
            "msg_cap": self.msg_cap,
            "target": str(self.target),
            "complete": self.complete,
            "message_functions": self.message_functions,
            "output_maps": self.output_maps,
            "passing": [list(map(list, p)) for p in self.passing],
        }


def _set_partitions(items: List[int], max_blocks: int):
    """Set partitions of ``items`` into at most ``max_blocks`` blocks."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest, max_blocks):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        if len(part) < max_blocks:
            yield [[first]] + part


def _branch_has_key(post: TripartiteDistribution, target: Fraction, counter: List[int]) -> bool:
    """Is there a tied deterministic bit assignment passing the strict test?

    Tied outputs must be constant on J_XY components, so they are exactly
    the bit assignments to those components.
    """
    cf = common_function(post, "XY")
    comps = cf.components
    counter[0] += 2 ** len(comps)
    pz = post.z_marginal()
    mass_cz: Dict[Tuple[object, int], Fraction] = {}
    for (x, y, z), p in post.events.items():
        key = (cf.first[x], z)
        mass_cz[key] = mass_cz.get(key, 0) + p
    for bits in itertools.product((0, 1), repeat=len(comps)):
        assign = dict(zip(comps, bits))
        p0 = sum((cf.component_probs[c] for c in comps if assign[c] == 0), Fraction(0))
        if p0 not in (target, 1 - target):
            continue
        if all(sum((m for (c, zz), m in mass_cz.items() if zz == z and assign[c] == 0), Fraction(0)) / pz[z] == p0
               for z in pz):
            return True
    return False


def exhaustive_one_round_search(d: TripartiteDistribution, starter: str, msg_cap: int, target,
                                budget: int = 1_000_000) -> SearchReport:
    """Every deterministic single message from ``starter`` (up to renaming of
    message values), followed by every tied deterministic output map."""
    target = check_bias(Fraction(target), "target bias")
    if not 0 <= msg_cap <= 4:
        raise DomainError("msg_cap must be between 0 and 4")
    if max(d.x_size, d.y_size) > 8:
        raise DomainError("alphabets above 8 are outside the search domain")
    axis = PARTY_AXIS[starter]
    values = d.support_values("xy"[axis])
    n_funcs = 0
    counter = [0]
    passing = []
    complete = True
    for part in _set_partitions(values, max(msg_cap, 1)):
        if counter[0] > budget:
            complete = False
            break
        n_funcs += 1
        ok = True
        for block in part:
            sub = _restrict(d, axis, block)
            if not _branch_has_key(sub, target, counter):
                ok = False
                break
        if ok:
            passing.append(tuple(tuple(b) for b in sorted(part)))
    return SearchReport(starter, msg_cap, target, complete, n_funcs, counter[0], passing)
