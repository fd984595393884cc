"""Structured verdicts shared by the verifiers and the CLI."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List

PASS = "PASS"
FAIL = "FAIL"
INCONCLUSIVE = "INCONCLUSIVE"

EXIT_CODES = {PASS: 0, FAIL: 1, INCONCLUSIVE: 2}


def fmt_bits(value: float) -> str:
    return f"{value:.12f}"


def combine(verdicts) -> str:
    verdicts = list(verdicts)
    if any(v == FAIL for v in verdicts):
        return FAIL
    if any(v == INCONCLUSIVE for v in verdicts):
        return INCONCLUSIVE
    return PASS


@dataclass
class BranchVerdict:
    transcript: str
    verdict: str
    diagnostics: List[str] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"transcript": self.transcript, "verdict": self.verdict, "diagnostics": list(self.diagnostics)}
        if self.details:
            out["details"] = self.details
        return out


@dataclass
class VerificationReport:
    name: str
    verdict: str
    branches: List[BranchVerdict] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    @property
    def diagnostics(self) -> List[str]:
        return [d for b in self.branches for d in b.diagnostics]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "verdict": self.verdict,
            "details": self.details,
            "branches": [b.to_dict() for b in self.branches],
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True, ensure_ascii=False)
