"""JSON serialization and ASCII grid rendering for distributions."""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

from .dist import DomainError, TripartiteDistribution, parse_fraction

EMPTY = "·"


def frac_str(p: Fraction) -> str:
    p = Fraction(p)
    return f"{p.numerator}/{p.denominator}"


def dist_to_dict(d: TripartiteDistribution) -> dict:
    return {
        "x_size": d.x_size,
        "y_size": d.y_size,
        "z_size": d.z_size,
        "events": [
            {"x": x, "y": y, "z": z, "p": frac_str(p)}
            for (x, y, z), p in sorted(d.events.items(), key=lambda kv: (kv[0][2], kv[0][1], kv[0][0]))
        ],
    }


def dist_to_json(d: TripartiteDistribution, indent: Optional[int] = 2) -> str:
    return json.dumps(dist_to_dict(d), indent=indent)


def dist_from_dict(obj: dict) -> TripartiteDistribution:
    try:
        sizes = [int(obj[k]) for k in ("x_size", "y_size", "z_size")]
        raw = obj["events"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed distribution object: {exc}") from None
    events = {}
    for i, ev in enumerate(raw):
        try:
            key = (int(ev["x"]), int(ev["y"]), int(ev["z"]))
            p = parse_fraction(ev["p"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"event #{i}: {exc}") from None
        if p == 0:
            raise DomainError(f"event #{i} {key}: zero event listed; omit zero-probability events")
        if key in events:
            raise DomainError(f"event #{i} {key}: duplicate event")
        events[key] = p
    return TripartiteDistribution(*sizes, events)


def dist_from_json(text: str) -> TripartiteDistribution:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        context = lines[exc.lineno - 1] if 0 < exc.lineno <= len(lines) else ""
        raise DomainError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}: {context.strip()!r}") from None
    return dist_from_dict(obj)


def load_distribution(path) -> TripartiteDistribution:
    path = Path(path)
    if not path.exists():
        raise DomainError(f"no such file: {path}")
    return dist_from_json(path.read_text())


def roundtrip(path) -> TripartiteDistribution:
    """Load a distribution and check that re-export reproduces it exactly."""
    d = load_distribution(path)
    again = dist_from_json(dist_to_json(d))
    if again != d:
        raise DomainError("re-import does not reproduce the distribution")
    return d


def grid_cells(d: TripartiteDistribution) -> List[List[str]]:
    """Cells of the x/y grid (rows are y); each cell lists its z-values."""
    cells = {}
    for (x, y, z) in d.events:
        cells.setdefault((x, y), []).append(z)
    return [
        ["/".join(str(z) for z in sorted(cells[(x, y)])) if (x, y) in cells else EMPTY for x in range(d.x_size)]
        for y in range(d.y_size)
    ]


def render_ascii(d: TripartiteDistribution) -> str:
    rows = grid_cells(d)
    width = max([len(str(d.x_size - 1))] + [len(c) for row in rows for c in row])
    label = len(str(d.y_size - 1))
    head = " " * label + " | " + " ".join(str(x).rjust(width) for x in range(d.x_size))
    lines = [head, "-" * (label + 1) + "+" + "-" * (len(head) - label - 2)]
    for y, row in enumerate(rows):
        lines.append(str(y).rjust(label) + " | " + " ".join(c.rjust(width) for c in row))
    return "\n".join(lines)


def parse_ascii(text: str) -> List[List[str]]:
    """Inverse of :func:`render_ascii` at the cell level."""
    out = []
    for line in text.splitlines()[2:]:
        _, _, body = line.partition("|")
        out.append(body.split())
    return out
