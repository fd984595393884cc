import json
from fractions import Fraction as F

import pytest

from origami.dist import DomainError, origami
from origami.io import (
    EMPTY,
    dist_from_dict,
    dist_from_json,
    dist_to_json,
    grid_cells,
    load_distribution,
    parse_ascii,
    render_ascii,
    roundtrip,
)


def test_json_roundtrip_is_byte_identical(tmp_path):
    d = origami(3, F(1, 3))
    path = tmp_path / "b3.json"
    text = dist_to_json(d)
    path.write_text(text)
    back = roundtrip(path)
    assert back == d
    assert dist_to_json(back) == text


def test_fractions_are_reduced_on_import():
    obj = json.loads(dist_to_json(origami(1, F(1, 2))))
    for e in obj["events"]:
        e["p"] = "2/16"
    assert dist_from_dict(obj).events[(0, 0, 0)] == F(1, 8)


def test_rejects_overweight_file():
    obj = json.loads(dist_to_json(origami(1, F(1, 2))))
    obj["events"][0]["p"] = "3/16"
    with pytest.raises(DomainError):
        dist_from_dict(obj)


def test_rejects_zero_event():
    obj = json.loads(dist_to_json(origami(1, F(1, 2))))
    obj["events"].append({"x": 0, "y": 1, "z": 0, "p": "0"})
    with pytest.raises(DomainError, match="zero event"):
        dist_from_dict(obj)


def test_rejects_duplicates_and_floats():
    obj = json.loads(dist_to_json(origami(1, F(1, 2))))
    obj["events"].append(dict(obj["events"][0]))
    with pytest.raises(DomainError, match="duplicate"):
        dist_from_dict(obj)
    obj = json.loads(dist_to_json(origami(1, F(1, 2))))
    obj["events"][0]["p"] = "0.125"
    with pytest.raises(DomainError):
        dist_from_dict(obj)


def test_parse_error_reports_line():
    text = dist_to_json(origami(1, F(1, 2))).replace('"z_size": 4,', '"z_size": 4')
    with pytest.raises(DomainError, match="line 5"):
        dist_from_json(text)


def test_missing_file(tmp_path):
    with pytest.raises(DomainError, match="no such file"):
        load_distribution(tmp_path / "nope.json")


def test_ascii_render_and_parse():
    d = origami(2, F(1, 3))
    text = render_ascii(d)
    assert EMPTY in text
    assert parse_ascii(text) == grid_cells(d)
    assert text.splitlines()[2] == "0 | 0 · · 1 4 · · 5"
