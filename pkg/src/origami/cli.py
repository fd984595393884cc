"""Command-line entry point.

Exit codes: 0 all checks pass, 1 a check fails, 2 inconclusive, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Tuple

from . import io as dio
from .dist import DomainError, OrigamiParams, build_origami, check_bias, origami, parse_fraction
from .lopc import (
    audit_block_survival,
    exhaustive_one_round_search,
    make_achievability_protocol,
    mandated_starter,
    trace_protocol,
    verify_blockwise_key,
    verify_strict_key,
)
from .quantum import (
    COMPLETE_TOL,
    embed_distribution,
    leaf_fidelities,
    make_locc_achievability,
    prop4_random_search,
    run_locc,
)
from .report import EXIT_CODES, FAIL, INCONCLUSIVE, PASS, combine, fmt_bits
from .srank import EXCEEDS_CAP, MAX_CAP, SuiteConfig, monotone_suite, slice_ranks
from .structure import verify_structure

EX_USAGE = 64
FIDELITY_TOL = 1e-10
PROP4_MARGIN = 1e-6

PARTIES = {"alice": "A", "bob": "B", "a": "A", "b": "B"}


class UsageError(Exception):
    pass


@dataclass
class CommandConfig:
    subcommand: str
    rounds: int = 1
    bias: Fraction = Fraction(1, 2)
    target: Optional[Fraction] = None
    starter: Optional[str] = None
    align: bool = False
    mode: str = "strict"
    seed: int = 0
    trials: int = 1000
    cap: int = MAX_CAP
    msg_cap: int = 4
    input: Optional[str] = None
    output: Optional[str] = None
    format: str = "json"
    suite_config: Optional[str] = None

    def to_dict(self) -> dict:
        out = {}
        for k, v in asdict(self).items():
            if v is None:
                continue
            out[k] = str(v) if isinstance(v, Fraction) else v
        out.pop("output", None)
        return out


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False)


def _report(cfg: CommandConfig, verdict: str, body: dict) -> Tuple[int, str]:
    return EXIT_CODES[verdict], _dump({"config": cfg.to_dict(), "verdict": verdict, **body})


def _load(path):
    try:
        return dio.load_distribution(path)
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def _target(cfg: CommandConfig) -> Fraction:
    return cfg.target if cfg.target is not None else cfg.bias


def _build(cfg):
    d = build_origami(OrigamiParams(cfg.rounds, cfg.bias))
    grid = dio.render_ascii(d)
    if cfg.format == "ascii":
        return 0, grid.rstrip("\n")
    return _report(cfg, PASS, {"distribution": dio.dist_to_dict(d), "ascii": grid.splitlines()})


def _verify_structure(cfg):
    rep = verify_structure(cfg.rounds, cfg.bias)
    return _report(cfg, rep.verdict, {"report": rep.to_dict()})


def _run_lopc(cfg):
    params = OrigamiParams(cfg.rounds, cfg.bias)
    d = build_origami(params)
    target = _target(cfg)
    proto = make_achievability_protocol(params, target, cfg.starter, align=cfg.align)
    levels = trace_protocol(d, proto)
    leaves = levels[-1]
    strict = verify_strict_key(leaves, target)
    block = verify_blockwise_key(leaves, cfg.bias)
    audit = audit_block_survival(d, levels[: cfg.rounds + 1])
    chosen = strict if cfg.mode == "strict" else block
    verdict = combine([chosen.verdict, FAIL if audit.flagged else PASS])
    return _report(cfg, verdict, {
        "starter": proto.rounds[0].party if proto.rounds else None,
        "strict": strict.to_dict(),
        "blockwise": block.to_dict(),
        "audit": audit.to_dict(),
    })


def _run_locc(cfg):
    params = OrigamiParams(cfg.rounds, cfg.bias)
    target = _target(cfg)
    diagnostics = []
    try:
        sched = make_locc_achievability(params, target, cfg.starter)
    except DomainError as exc:
        return _report(cfg, FAIL, {"diagnostics": [f"no schedule: {exc}"]})
    complete = all(ins.is_complete(COMPLETE_TOL) for ins in sched.instruments())
    run = run_locc(embed_distribution(build_origami(params)), sched)
    fids = leaf_fidelities(run, target)
    worst = min(fids)
    if not complete:
        diagnostics.append("an instrument is not complete")
    if worst < 1 - FIDELITY_TOL:
        diagnostics.append(f"leaf fidelity {fmt_bits(worst)} below 1 - {FIDELITY_TOL:g}")
    if run.rank_drops:
        diagnostics.append(f"{run.rank_drops} Schmidt-rank drops")
    return _report(cfg, FAIL if diagnostics else PASS, {
        "leaves": len(run.leaves),
        "min_fidelity": fmt_bits(worst),
        "rank_drops": run.rank_drops,
        "complete": complete,
        "diagnostics": diagnostics,
    })


def _secrecy_rank(cfg):
    d = _load(cfg.input) if cfg.input else origami(cfg.rounds, cfg.bias)
    ranks = slice_ranks(d, cfg.cap)
    values = list(ranks.values())
    value = EXCEEDS_CAP if EXCEEDS_CAP in values else max(values)
    verdict = INCONCLUSIVE if value == EXCEEDS_CAP else PASS
    return _report(cfg, verdict, {"secrecy_rank": value, "slice_ranks": {str(z): r for z, r in ranks.items()}})


def _monotone_suite(cfg):
    if cfg.suite_config:
        try:
            suite = SuiteConfig.from_json(Path(cfg.suite_config).read_text())
        except (OSError, ValueError, TypeError) as exc:
            raise UsageError(f"bad suite config: {exc}") from None
    else:
        suite = SuiteConfig(trials=cfg.trials, seed=cfg.seed)
    out = monotone_suite(suite, cfg.cap)
    return _report(cfg, out["verdict"], {"suite": out})


def _search_one_round(cfg):
    d = origami(cfg.rounds, cfg.bias)
    starter = cfg.starter or mandated_starter(cfg.rounds)
    rep = exhaustive_one_round_search(d, starter, cfg.msg_cap, _target(cfg))
    return _report(cfg, PASS if rep.complete else INCONCLUSIVE, {"search": rep.to_dict()})


def _prop4_search(cfg):
    rep = prop4_random_search(cfg.bias, _target(cfg), cfg.trials, cfg.seed)
    verdict = PASS if rep.max_min_fidelity < 1 - PROP4_MARGIN else FAIL
    return _report(cfg, verdict, {"search": rep.to_dict()})


def _roundtrip(cfg):
    if not cfg.input:
        raise UsageError("roundtrip needs --input")
    _load(cfg.input)
    try:
        d = dio.roundtrip(cfg.input)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    return 0, dio.dist_to_json(d)


COMMANDS = {
    "build": _build,
    "verify-structure": _verify_structure,
    "run-lopc": _run_lopc,
    "run-locc": _run_locc,
    "secrecy-rank": _secrecy_rank,
    "monotone-suite": _monotone_suite,
    "search-one-round": _search_one_round,
    "prop4-search": _prop4_search,
    "roundtrip": _roundtrip,
}


def execute(cfg: CommandConfig) -> Tuple[int, str]:
    """Run one subcommand; returns (exit code, text to emit)."""
    if cfg.subcommand not in COMMANDS:
        raise UsageError(f"unknown subcommand {cfg.subcommand!r}")
    return COMMANDS[cfg.subcommand](cfg)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _fraction(text: str) -> Fraction:
    try:
        return check_bias(parse_fraction(text))
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _party(text: str) -> str:
    try:
        return PARTIES[text.lower()]
    except KeyError:
        raise argparse.ArgumentTypeError(f"starter must be alice or bob, got {text!r}")


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="origami", description="Origami distributions: construction and key-agreement checks.")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def add(name, help_, rounds=True, bias=True, target=False, starter=False):
        s = sub.add_parser(name, help=help_)
        if rounds:
            s.add_argument("--rounds", type=_positive, default=1)
        if bias:
            s.add_argument("--bias", type=_fraction, default=Fraction(1, 2), help='lambda as "num/den"')
        if target:
            s.add_argument("--target", type=_fraction, help="target bias (defaults to --bias)")
        if starter:
            s.add_argument("--starter", type=_party, help="alice or bob (defaults to the required starter)")
        s.add_argument("--output", help="write the report here instead of stdout")
        return s

    s = add("build", "emit b^(r, lambda) as JSON with its ASCII grid")
    s.add_argument("--format", choices=["json", "ascii"], default="json")
    add("verify-structure", "common-function, recursion and entropy checks")
    s = add("run-lopc", "classical achievability protocol with verifiers and audits", target=True, starter=True)
    s.add_argument("--align", action="store_true", help="append the alignment round")
    s.add_argument("--mode", choices=["strict", "blockwise"], default="strict")
    add("run-locc", "quantum measurement schedule and leaf fidelities", target=True, starter=True)
    s = add("secrecy-rank", "per-slice nonnegative ranks")
    s.add_argument("--input", help="distribution JSON (defaults to the origami level)")
    s.add_argument("--cap", type=_positive, default=MAX_CAP)
    s = add("monotone-suite", "seeded rank-monotonicity trials", rounds=False, bias=False)
    s.add_argument("--trials", type=_positive, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--cap", type=_positive, default=MAX_CAP)
    s.add_argument("--suite-config", help="JSON suite configuration")
    s = add("search-one-round", "exhaustive single-message protocol search", target=True, starter=True)
    s.add_argument("--msg-cap", type=int, choices=range(0, 5), default=4)
    s = add("prop4-search", "random local operators on the one-round block", rounds=False, target=True)
    s.add_argument("--trials", type=_positive, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s = add("roundtrip", "re-export a distribution file exactly", rounds=False, bias=False)
    s.add_argument("--input", required=True)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    values = {k.replace("-", "_"): v for k, v in vars(args).items() if v is not None}
    cfg = CommandConfig(**values)
    try:
        code, text = execute(cfg)
    except UsageError as exc:
        print(f"origami: error: {exc}", file=sys.stderr)
        return EX_USAGE
    except DomainError as exc:
        print(f"origami: error: {exc}", file=sys.stderr)
        return EXIT_CODES[FAIL]
    if cfg.output:
        Path(cfg.output).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
