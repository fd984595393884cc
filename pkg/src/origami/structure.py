"""Structural checks on origami distributions: common functions, recursion, entropy."""

from __future__ import annotations

from fractions import Fraction

from .common_info import common_function, conditional_common_function
from .dist import OrigamiParams, Relabeling, Undecided, build_origami, check_bias, condition, find_relabeling, origami
from .info import ATOL, binary_entropy, conditional_mutual_information, exact_slice_entropy_profile
from .report import FAIL, INCONCLUSIVE, PASS, BranchVerdict, VerificationReport, combine, fmt_bits


def _check(name: str, ok, diagnostic: str = "", **details) -> BranchVerdict:
    if ok is None:
        return BranchVerdict(name, INCONCLUSIVE, [diagnostic or "undecided"], details)
    return BranchVerdict(name, PASS if ok else FAIL, [] if ok else [diagnostic], details)


def verify_structure(rounds: int, lam) -> VerificationReport:
    """Check one level b^(r, lam).

    Covers: J_XY trivial; J_XZ / J_YZ trivial or binary with the parity of
    r; each binary branch relabels onto b^(r-1, lam); every slice has
    weights {lam, 1 - lam} and a binary J_XY|Z; I(X:Y|Z) = h(lam).
    """
    lam = check_bias(Fraction(lam))
    d = build_origami(OrigamiParams(rounds, lam))
    checks = []

    jxy = common_function(d, "XY")
    checks.append(_check("J_XY trivial", jxy.is_trivial,
                         f"J_XY has {jxy.n_components} components"))

    binary_pair, trivial_pair = ("YZ", "XZ") if rounds % 2 else ("XZ", "YZ")
    jt = common_function(d, trivial_pair)
    jb = common_function(d, binary_pair)
    checks.append(_check(f"J_{trivial_pair} trivial", jt.is_trivial,
                         f"J_{trivial_pair} has {jt.n_components} components"))
    checks.append(_check(f"J_{binary_pair} binary", jb.n_components == 2,
                         f"J_{binary_pair} has {jb.n_components} components"))

    if jb.n_components == 2:
        axis = 0 if binary_pair == "XZ" else 1
        target = origami(rounds - 1, lam)
        for label in range(2):
            members = {v for v, c in jb.first.items() if jb.index(c) == label}
            sub, mass = condition(d, lambda x, y, z: (x, y)[axis] in members)
            found = find_relabeling(sub, target)
            name = f"J_{binary_pair}={label} relabels onto b^({rounds - 1})"
            if isinstance(found, Relabeling):
                checks.append(_check(name, found.carries(sub, target), "relabeling does not carry",
                                     mass=str(mass)))
            elif isinstance(found, Undecided):
                checks.append(_check(name, None, found.reason, mass=str(mass)))
            else:
                checks.append(_check(name, False, "no relabeling exists", mass=str(mass)))

    want = {lam, 1 - lam}
    bad = [z for z, prof in exact_slice_entropy_profile(d).items() if set(prof) != want or sum(prof.values()) != 2]
    checks.append(_check("slice weights {lam, 1-lam}", not bad, f"slices {bad[:5]} deviate"))

    cond = conditional_common_function(d)
    bad = [z for z, cf in cond.per_condition.items() if set(cf.component_probs.values()) != want or cf.n_components != 2]
    checks.append(_check("J_XY|Z binary with weights {lam, 1-lam}", not bad, f"slices {bad[:5]} deviate"))

    cmi = conditional_mutual_information(d)
    h = binary_entropy(lam)
    checks.append(_check("I(X:Y|Z) = h(lam)", abs(cmi - h) <= ATOL,
                         f"I(X:Y|Z) = {fmt_bits(cmi)} differs from h = {fmt_bits(h)}",
                         cmi=fmt_bits(cmi), h=fmt_bits(h)))

    return VerificationReport(
        "structure",
        combine(c.verdict for c in checks),
        checks,
        {"rounds": rounds, "bias": str(lam), "sizes": list(d.shape)},
    )
