"""Pure-state embedding of origami distributions and local-operation simulation.

States are stored as coefficient matrices ``C[x, y]`` so that Alice's
operator K acts as ``K @ C`` and Bob's as ``C @ K.T``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .dist import DomainError, OrigamiParams, TripartiteDistribution, build_base, build_origami, check_bias
from .lopc import _announcer_labels, _key_bits, _other, _restrict, make_bias_adjust, mandated_starter

RANK_TOL = 1e-9
ELIM_TOL = 1e-14
COMPLETE_TOL = 1e-10

Transcript = Tuple[int, ...]


@dataclass(frozen=True)
class StateVector:
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.ndim != 2:
            raise DomainError("coefficients must form a dA x dB matrix")
        object.__setattr__(self, "coeffs", c)

    @property
    def dims(self) -> Tuple[int, int]:
        return self.coeffs.shape

    @property
    def vector(self) -> np.ndarray:
        return self.coeffs.reshape(-1)

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.coeffs, self.coeffs).real)

    def normalized(self) -> "StateVector":
        n = math.sqrt(self.norm2)
        if n == 0:
            raise DomainError("zero vector")
        return StateVector(self.coeffs / n)


@dataclass(frozen=True)
class Member:
    weight: object
    z: int
    state: StateVector


@dataclass(frozen=True)
class QuantumEnsemble:
    members: Tuple[Member, ...]

    def __len__(self):
        return len(self.members)

    def by_z(self) -> Dict[int, Member]:
        return {m.z: m for m in self.members}

    def to_dict(self) -> dict:
        out = []
        for m in self.members:
            w = m.weight
            c = m.state.coeffs
            out.append({
                "z": m.z,
                "weight": f"{w.numerator}/{w.denominator}" if isinstance(w, Fraction) else f"{float(w):.12f}",
                "dims": list(c.shape),
                "amplitudes": [[_amp(v) for v in row] for row in c],
            })
        return {"members": out}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _amp(v) -> str:
    v = complex(v)
    if v.imag == 0:
        return f"{v.real:.12f}"
    return f"{v.real:.12f}{v.imag:+.12f}j"


@dataclass(frozen=True)
class LocalOperator:
    side: str
    matrix: np.ndarray

    def __post_init__(self):
        if self.side not in ("A", "B"):
            raise DomainError(f"unknown side {self.side!r}")
        object.__setattr__(self, "matrix", np.asarray(self.matrix))

    def act(self, c: np.ndarray) -> np.ndarray:
        if self.side == "A":
            if self.matrix.shape[1] != c.shape[0]:
                raise DomainError("operator does not match Alice's dimension")
            return self.matrix @ c
        if self.matrix.shape[1] != c.shape[1]:
            raise DomainError("operator does not match Bob's dimension")
        return c @ self.matrix.T


def completeness_residual(kraus: Sequence[np.ndarray]) -> float:
    k0 = np.asarray(kraus[0])
    total = sum(np.asarray(k).conj().T @ np.asarray(k) for k in kraus)
    return float(np.linalg.norm(total - np.eye(k0.shape[1])))


@dataclass(frozen=True)
class Instrument:
    side: str
    kraus: Tuple[np.ndarray, ...]
    labels: Tuple[object, ...] = ()

    def operators(self) -> List[LocalOperator]:
        return [LocalOperator(self.side, k) for k in self.kraus]

    def is_complete(self, tol: float = COMPLETE_TOL) -> bool:
        return completeness_residual(self.kraus) <= tol


# --------------------------------------------------------------------------
# embedding and Schmidt data


def embed_distribution(d: TripartiteDistribution) -> QuantumEnsemble:
    """One member per z: weight p(z), state sum_xy sqrt(p(x, y | z)) |x>|y>."""
    pz = d.z_marginal()
    members = []
    for z, cell in d.slices().items():
        c = np.zeros((d.x_size, d.y_size))
        for (x, y), p in cell.items():
            c[x, y] = math.sqrt(p)
        members.append(Member(pz[z], z, StateVector(c)))
    return QuantumEnsemble(tuple(members))


def schmidt_coefficients(s: StateVector) -> np.ndarray:
    """Squared singular values, normalized and sorted in decreasing order."""
    sv = np.linalg.svd(s.coeffs, compute_uv=False)
    total = float(np.sum(sv ** 2))
    if total == 0:
        raise DomainError("zero vector")
    return np.sort(sv ** 2 / total)[::-1]


def schmidt_rank(s: StateVector, tol: float = RANK_TOL) -> int:
    if not 1e-12 <= tol <= 1e-6:
        raise DomainError("tol must lie in [1e-12, 1e-6]")
    sv = np.linalg.svd(s.coeffs, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        raise DomainError("zero vector")
    return int(np.sum(sv > tol * sv[0]))


def entanglement_entropy(s: StateVector) -> float:
    lam = schmidt_coefficients(s)
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log2(lam)))


def phi_state(lam, dims: Tuple[int, int] = (2, 2)) -> StateVector:
    """sqrt(lam)|00> + sqrt(1-lam)|11> inside a dims[0] x dims[1] space."""
    lam = float(lam)
    c = np.zeros(dims)
    c[0, 0], c[1, 1] = math.sqrt(lam), math.sqrt(1 - lam)
    return StateVector(c)


def fidelity(a: StateVector, b: StateVector) -> float:
    a, b = a.normalized(), b.normalized()
    return float(abs(np.vdot(a.coeffs, b.coeffs)) ** 2)


def spectral_fidelity(s: StateVector, lam_target) -> float:
    """Fidelity between Schmidt spectra: the best any local unitaries can do."""
    p = schmidt_coefficients(s)
    t = np.zeros(max(len(p), 2))
    t[0], t[1] = 1 - float(lam_target), float(lam_target)
    t = np.sort(t)[::-1]
    n = min(len(p), len(t))
    return float(np.sum(np.sqrt(p[:n] * t[:n])) ** 2)


# --------------------------------------------------------------------------
# applying local operators


@dataclass
class MemberReport:
    z: int
    norm2: float
    eliminated: bool
    rank_before: int
    rank_after: Optional[int]

    @property
    def rank_drop(self) -> bool:
        return not self.eliminated and self.rank_after < self.rank_before


@dataclass
class EliminationReport:
    probability: float
    members: List[MemberReport]
    stage: str = ""

    @property
    def rank_drops(self) -> List[int]:
        return [m.z for m in self.members if m.rank_drop]

    @property
    def eliminated(self) -> List[int]:
        return [m.z for m in self.members if m.eliminated]


def _apply(e: QuantumEnsemble, k: LocalOperator, tol: float = RANK_TOL):
    rows, new = [], []
    total = 0.0
    for m in e.members:
        c = k.act(m.state.coeffs)
        n2 = float(np.vdot(c, c).real)
        before = schmidt_rank(m.state, tol)
        if n2 < ELIM_TOL:
            rows.append(MemberReport(m.z, n2, True, before, None))
            continue
        s = StateVector(c / math.sqrt(n2))
        rows.append(MemberReport(m.z, n2, False, before, schmidt_rank(s, tol)))
        w = float(m.weight) * n2
        total += w
        new.append((w, m.z, s))
    ens = QuantumEnsemble(tuple(Member(w / total, z, s) for w, z, s in new)) if total > 0 else None
    return ens, EliminationReport(total, rows)


def apply_local_operator(e: QuantumEnsemble, k: LocalOperator, tol: float = RANK_TOL):
    """Apply one Kraus operator; returns (posterior ensemble, report)."""
    ens, report = _apply(e, k, tol)
    if ens is None:
        raise DomainError("every member was eliminated")
    return ens, report


# --------------------------------------------------------------------------
# Nielsen-type bias step


@dataclass(frozen=True)
class NielsenStep:
    """Two-outcome local measurement taking Phi_lam to Phi_target.

    On outcome 1 the other party applies ``correction`` (a bit flip).
    """

    source: Fraction
    target: Fraction
    m0: np.ndarray
    m1: np.ndarray
    correction: np.ndarray

    @property
    def is_identity(self) -> bool:
        return not np.any(self.m1)

    def embedded(self, dim: int) -> Tuple[np.ndarray, np.ndarray]:
        """The two operators extended to a ``dim``-level system (identity beyond |1>)."""
        m0 = np.eye(dim)
        m1 = np.zeros((dim, dim))
        m0[:2, :2] = self.m0
        m1[:2, :2] = self.m1
        return m0, m1


def make_nielsen_step(lam=Fraction(1, 2), lam_target=Fraction(1, 2)) -> NielsenStep:
    adj = make_bias_adjust(Fraction(lam), Fraction(lam_target))
    q0, q1 = (float(q) for q in adj.keep)
    x = np.array([[0.0, 1.0], [1.0, 0.0]])
    m0 = np.diag([math.sqrt(q0), math.sqrt(q1)])
    m1 = x @ np.diag([math.sqrt(1 - q0), math.sqrt(1 - q1)])
    return NielsenStep(adj.source, adj.target, m0, m1, x)


# --------------------------------------------------------------------------
# measurement schedules


def _flip(dim: int) -> np.ndarray:
    u = np.eye(dim)
    u[[0, 1]] = u[[1, 0]]
    return u


def fold_instrument(side: str, dim: int, post: TripartiteDistribution, key: Mapping[int, int]) -> Instrument:
    """Coherently map this party's support onto the two key levels.

    Values that share a z-slice are grouped; each group must carry distinct
    key bits. A Fourier-phase family over the groups makes the instrument
    complete while every outcome leaves each slice intact up to a phase.
    Values outside the support get a separate rejecting outcome.
    """
    axis = 0 if side == "A" else 1
    parent = {v: v for v in key}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    by_z: Dict[int, list] = {}
    for e in post.events:
        by_z.setdefault(e[2], []).append(e[axis])
    for vals in by_z.values():
        for v in vals[1:]:
            parent[find(v)] = find(vals[0])
    roots = sorted({find(v) for v in key})
    group = {v: roots.index(find(v)) for v in key}
    for g in range(len(roots)):
        bits = [key[v] for v in key if group[v] == g]
        if len(bits) != len(set(bits)):
            raise DomainError("a fold group holds two values with the same key bit")
    n_groups = len(roots)
    kraus = []
    for s in range(n_groups):
        k = np.zeros((dim, dim), dtype=complex if n_groups > 2 else float)
        for v, b in key.items():
            phase = np.exp(2j * np.pi * s * group[v] / n_groups) if n_groups > 2 else (-1) ** (s * group[v])
            k[b, v] = phase / math.sqrt(n_groups)
        kraus.append(k)
    labels = list(range(n_groups))
    off = [v for v in range(dim) if v not in key]
    if off:
        p = np.zeros((dim, dim))
        for v in off:
            p[v, v] = 1.0
        kraus.append(p)
        labels.append("reject")
    return Instrument(side, tuple(kraus), tuple(labels))


@dataclass(frozen=True)
class LoccRound:
    party: str
    instruments: Mapping[Transcript, Instrument]


@dataclass(frozen=True)
class LoccSchedule:
    """Public rounds followed by unannounced local steps keyed by transcript."""

    dims: Tuple[int, int]
    rounds: Tuple[LoccRound, ...]
    finish: Mapping[Transcript, Tuple[Instrument, ...]] = field(default_factory=dict)
    target: Optional[Fraction] = None

    def instruments(self) -> List[Instrument]:
        out = [ins for r in self.rounds for ins in r.instruments.values()]
        out += [ins for steps in self.finish.values() for ins in steps]
        return out

    def to_json(self) -> str:
        def enc(ins: Instrument):
            return {"side": ins.side, "labels": [str(l) for l in ins.labels],
                    "kraus": [[[_amp(v) for v in row] for row in k] for k in ins.kraus]}
        obj = {
            "dims": list(self.dims),
            "rounds": [{"party": r.party,
                        "instruments": {",".join(map(str, t)): enc(i) for t, i in sorted(r.instruments.items())}}
                       for r in self.rounds],
            "finish": {",".join(map(str, t)): [enc(i) for i in steps] for t, steps in sorted(self.finish.items())},
        }
        return json.dumps(obj, indent=2)


def _projectors(dim: int, labels: Mapping[int, int], n: int) -> List[np.ndarray]:
    out = [np.zeros((dim, dim)) for _ in range(n)]
    for v in range(dim):
        j = labels.get(v, 0)
        out[j][v, v] = 1.0
    return out


def make_locc_achievability(params: OrigamiParams, target, starter: Optional[str] = None) -> LoccSchedule:
    """Projective common-information rounds, then fold, bias step and correction.

    The final announcer's instrument is the composite (Nielsen step) x (fold)
    x (block projector); its outcome index is announced. Afterwards the other
    party folds its side and, if the Nielsen outcome was 1, flips its bit.
    """
    lam = params.bias
    target = check_bias(Fraction(target), "target bias")
    step = make_nielsen_step(lam, target)
    starter = starter or mandated_starter(params.rounds)
    d = build_origami(params)
    dims = (d.x_size, d.y_size)
    level = [((), d)]
    rounds = []
    party = starter
    finish = {}
    for i in range(params.rounds):
        last = i == params.rounds - 1
        axis = 0 if party == "A" else 1
        dim = dims[axis]
        instruments = {}
        nxt = []
        for t, post in level:
            labels, n = _announcer_labels(post, party)
            projs = _projectors(dim, labels, n)
            if not last:
                instruments[t] = Instrument(party, tuple(projs), tuple(range(n)))
                for j in range(n):
                    nxt.append((t + (j,), _restrict(post, axis, [v for v, l in labels.items() if l == j])))
                continue
            kraus, tags = [], []
            m0, m1 = step.embedded(dim)
            outs = [(0, m0)] if step.is_identity else [(0, m0), (1, m1)]
            for j in range(n):
                sub = _restrict(post, axis, [v for v, l in labels.items() if l == j])
                kx, ky = _key_bits(sub)
                mine = kx if axis == 0 else ky
                fold = fold_instrument(party, dim, sub, mine)
                for g, f in zip(fold.labels, fold.kraus):
                    for k, m in outs:
                        kraus.append(m @ f @ projs[j] if g != "reject" else f @ projs[j])
                        tags.append((j, g, k if g != "reject" else None))
                        if g == "reject":
                            break
                for pos, (jj, g, k) in enumerate(tags):
                    if jj != j or g == "reject":
                        continue
                    mt = t + (pos,)
                    theirs = ky if axis == 0 else kx
                    other = _other(party)
                    odim = dims[1 - axis]
                    steps = [fold_instrument(other, odim, sub, theirs)]
                    if k == 1:
                        steps.append(Instrument(other, (_flip(odim),), ("flip",)))
                    finish[mt] = tuple(steps)
            instruments[t] = Instrument(party, tuple(kraus), tuple(tags))
        rounds.append(LoccRound(party, instruments))
        level = nxt
        party = _other(party)
    return LoccSchedule(dims, tuple(rounds), finish, target)


@dataclass
class LoccLeaf:
    transcript: Transcript
    private: Tuple[object, ...]
    probability: float
    ensemble: QuantumEnsemble


@dataclass
class LoccRun:
    leaves: List[LoccLeaf]
    reports: List[EliminationReport]

    @property
    def rank_drops(self) -> int:
        return sum(len(r.rank_drops) for r in self.reports)


def run_locc(e: QuantumEnsemble, schedule: LoccSchedule, tol: float = RANK_TOL) -> LoccRun:
    """Enumerate every outcome branch with positive probability."""
    reports = []
    level = [((), 1.0, e)]
    for rnd in schedule.rounds:
        nxt = []
        for t, prob, ens in level:
            ins = rnd.instruments[t]
            for pos, k in enumerate(ins.operators()):
                out, rep = _apply(ens, k, tol)
                rep.stage = f"round {len(t) + 1} outcome {ins.labels[pos] if ins.labels else pos} after m={t}"
                if out is None:
                    continue
                reports.append(rep)
                nxt.append((t + (pos,), prob * rep.probability, out))
        level = nxt
    leaves = []
    for t, prob, ens in level:
        states = [((), prob, ens)]
        for ins in schedule.finish.get(t, ()):
            grown = []
            for priv, p, cur in states:
                for pos, k in enumerate(ins.operators()):
                    out, rep = _apply(cur, k, tol)
                    if out is None:
                        continue
                    rep.stage = f"local {ins.labels[pos]} after m={t}"
                    reports.append(rep)
                    grown.append((priv + (ins.labels[pos],), p * rep.probability, out))
            states = grown
        leaves.extend(LoccLeaf(t, priv, p, ens) for priv, p, ens in states)
    return LoccRun(leaves, reports)


def leaf_fidelities(run: LoccRun, lam_target) -> List[float]:
    """Fidelity of every surviving member of every leaf to Phi_target."""
    out = []
    for leaf in run.leaves:
        for m in leaf.ensemble.members:
            out.append(fidelity(m.state, phi_state(lam_target, m.state.dims)))
    return out


# --------------------------------------------------------------------------
# no-communication falsification search on the one-round block


@dataclass
class Prop4Report:
    """Best trial of the search.

    ``max_min_fidelity`` is an upper bound on the min-over-branches fidelity
    to the best commonly aligned target; ``max_fixed_basis_fidelity`` is the
    same quantity with the target held in the computational basis, a lower
    bound.
    """

    trials: int
    seed: int
    max_min_fidelity: float
    best_trial: int
    max_fixed_basis_fidelity: float

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "max_min_fidelity": f"{self.max_min_fidelity:.12f}",
            "best_trial": self.best_trial,
            "max_fixed_basis_fidelity": f"{self.max_fixed_basis_fidelity:.12f}",
        }


def base_states(lam) -> List[StateVector]:
    return [m.state for m in embed_distribution(build_base(lam)).members]


def score_local_pair(a: np.ndarray, b: np.ndarray, states: Sequence[StateVector], lam_target) -> Tuple[float, float]:
    """Score one product operator A x B applied to every state.

    Returns (upper, fixed). ``upper`` bounds min_z F(psi_z', (U x V) Phi)
    over every common local alignment U x V: it is the smaller of the
    worst Schmidt-spectrum fidelity and the top eigenvalue of the averaged
    output projector. ``fixed`` is min_z F(psi_z', Phi) with U = V = I.
    A trial that eliminates any state scores (0, 0).
    """
    outs = []
    for s in states:
        c = a @ s.coeffs @ b.T
        n2 = float(np.vdot(c, c).real)
        if n2 < ELIM_TOL:
            return 0.0, 0.0
        outs.append(StateVector(c / math.sqrt(n2)))
    spectral = min(spectral_fidelity(s, lam_target) for s in outs)
    vecs = np.array([s.vector for s in outs])
    rho = vecs.T @ vecs.conj() / len(outs)
    common = float(np.max(np.linalg.eigvalsh(rho)))
    phi = phi_state(lam_target, outs[0].dims)
    fixed = min(fidelity(s, phi) for s in outs)
    return min(spectral, common), fixed


def prop4_random_search(lam, lam_target, trials: int, seed: int) -> Prop4Report:
    """Random product Kraus operators on the four one-round block states."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    states = base_states(lam)
    dim = states[0].dims[0]
    best, best_i, best_fixed = -1.0, -1, 0.0
    for i in range(trials):
        rng = np.random.default_rng([seed, i])
        a = rng.standard_normal((dim, dim))
        b = rng.standard_normal((dim, dim))
        a /= np.linalg.norm(a, 2)
        b /= np.linalg.norm(b, 2)
        upper, fixed = score_local_pair(a, b, states, lam_target)
        if upper > best:
            best, best_i = upper, i
        best_fixed = max(best_fixed, fixed)
    return Prop4Report(trials, seed, best, best_i, best_fixed)
