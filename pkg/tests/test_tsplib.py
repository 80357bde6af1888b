import io
import random
from pathlib import Path

import numpy as np
import pytest

from mrtsp.tsplib import (Instance, MissingKeywordError, ParseError,
                          TokenCountError, TokenValueError,
                          UnsupportedFormatError, format_instance,
                          load_instance, load_registry, parse_instance,
                          random_instance, save_registry)

INSTANCE_DIR = Path(__file__).resolve().parent.parent / "instances"

THREE_CITY = """\
NAME: toy3
TYPE: ATSP
DIMENSION: 3
EDGE_WEIGHT_TYPE: EXPLICIT
EDGE_WEIGHT_FORMAT: FULL_MATRIX
EDGE_WEIGHT_SECTION
0 1 2 2 0 3 4 5 0
EOF
"""


def test_parse_three_city_full_matrix():
    inst = parse_instance(THREE_CITY)
    assert inst.name == "toy3"
    assert inst.dimension == 3
    assert inst.rows == [[0, 1, 2], [2, 0, 3], [4, 5, 0]]
    assert inst.distances.dtype == np.int64


def test_parse_accepts_stream():
    inst = parse_instance(io.StringIO(THREE_CITY))
    assert inst.dimension == 3


def test_parse_euc_2d_three_four_five():
    text = """\
NAME: tri
TYPE: TSP
DIMENSION: 2
EDGE_WEIGHT_TYPE: EUC_2D
NODE_COORD_SECTION
1 0 0
2 3 4
EOF
"""
    inst = parse_instance(text)
    assert inst.rows[0][1] == 5
    assert inst.rows[1][0] == 5


def test_parse_euc_2d_rounds_to_nearest():
    text = """\
DIMENSION: 3
EDGE_WEIGHT_TYPE: EUC_2D
NODE_COORD_SECTION
1 0 0
2 1 2
3 2.5 0
EOF
"""
    inst = parse_instance(text)
    assert inst.rows[0][1] == 2   # sqrt(5) = 2.236 -> 2
    assert inst.rows[0][2] == 3   # 2.5 rounds up
    assert inst.rows[1][2] == 3   # sqrt(1.5^2 + 4) = 2.5 -> 3


def test_br17_matches_independent_reader(br17):
    # minimal line-oriented re-read: grab every numeric token after the
    # section keyword, stop at EOF
    tokens = []
    in_section = False
    for line in (INSTANCE_DIR / "br17.atsp").read_text().splitlines():
        stripped = line.strip()
        if stripped == "EDGE_WEIGHT_SECTION":
            in_section = True
            continue
        if stripped == "EOF":
            break
        if in_section:
            tokens.extend(float(tok) for tok in stripped.split())
    assert len(tokens) == 17 * 17
    expected = np.array(tokens).reshape(17, 17)
    assert br17.dimension == 17
    assert np.array_equal(br17.distances, expected)
    # diagonal is stored as read (br17 uses 9999), never normalized
    assert br17.rows[0][0] == 9999


def test_header_order_is_lenient():
    shuffled = """\
EDGE_WEIGHT_FORMAT: FULL_MATRIX
COMMENT: header lines in any order, unknown ones skipped
DIMENSION: 2
EDGE_WEIGHT_TYPE: EXPLICIT
NAME: weird
EDGE_WEIGHT_SECTION
0 7
9 0
EOF
"""
    inst = parse_instance(shuffled)
    assert inst.name == "weird"
    assert inst.rows == [[0, 7], [9, 0]]


def test_missing_dimension():
    text = "EDGE_WEIGHT_TYPE: EXPLICIT\nEDGE_WEIGHT_FORMAT: FULL_MATRIX\nEDGE_WEIGHT_SECTION\n0\nEOF\n"
    with pytest.raises(MissingKeywordError) as err:
        parse_instance(text)
    assert "DIMENSION" in str(err.value)


def test_unsupported_weight_type():
    text = "DIMENSION: 3\nEDGE_WEIGHT_TYPE: GEO\nEDGE_WEIGHT_SECTION\nEOF\n"
    with pytest.raises(UnsupportedFormatError):
        parse_instance(text)


def test_unsupported_matrix_format():
    text = ("DIMENSION: 3\nEDGE_WEIGHT_TYPE: EXPLICIT\n"
            "EDGE_WEIGHT_FORMAT: UPPER_ROW\nEDGE_WEIGHT_SECTION\nEOF\n")
    with pytest.raises(UnsupportedFormatError):
        parse_instance(text)


@pytest.mark.parametrize("section", ["0 1 2 2 0 3 4 5", "0 1 2 2 0 3 4 5 0 6"])
def test_wrong_token_count(section):
    text = (f"DIMENSION: 3\nEDGE_WEIGHT_TYPE: EXPLICIT\n"
            f"EDGE_WEIGHT_FORMAT: FULL_MATRIX\nEDGE_WEIGHT_SECTION\n{section}\nEOF\n")
    with pytest.raises(TokenCountError):
        parse_instance(text)


def test_non_numeric_token():
    text = ("DIMENSION: 2\nEDGE_WEIGHT_TYPE: EXPLICIT\n"
            "EDGE_WEIGHT_FORMAT: FULL_MATRIX\nEDGE_WEIGHT_SECTION\n0 1 x 0\nEOF\n")
    with pytest.raises(TokenValueError) as err:
        parse_instance(text)
    assert err.value.line is not None


def test_parse_errors_name_line_and_keyword():
    with pytest.raises(ParseError) as err:
        parse_instance("DIMENSION: nope\nEOF\n")
    assert err.value.line == 1


def test_full_matrix_round_trip():
    rng = random.Random(7)
    for n in (2, 5, 17):
        inst = random_instance(n, (0, 250), seed=rng.randrange(10**6))
        again = parse_instance(format_instance(inst))
        assert np.array_equal(inst.distances, again.distances)
        assert again.name == inst.name


def test_round_trip_preserves_floats():
    mat = np.array([[0.0, 1.5], [2.25, 0.0]])
    inst = Instance("floaty", 2, mat)
    again = parse_instance(format_instance(inst))
    assert again.distances.dtype == np.float64
    assert np.array_equal(again.distances, mat)


def test_random_instance_degenerate_range():
    inst = random_instance(2, (5, 5), seed=123)
    assert inst.rows == [[0, 5], [5, 0]]


def test_random_instance_determinism():
    a = random_instance(8, (1, 100), seed=42)
    b = random_instance(8, (1, 100), seed=42)
    c = random_instance(8, (1, 100), seed=43)
    assert np.array_equal(a.distances, b.distances)
    assert not np.array_equal(a.distances, c.distances)


@pytest.mark.parametrize("n", [1, 65])
def test_random_instance_bounds(n):
    with pytest.raises(ValueError):
        random_instance(n, (1, 10), seed=0)


def test_random_instance_bad_range():
    with pytest.raises(ValueError):
        random_instance(5, (10, 1), seed=0)


def test_instance_rejects_negative_entries():
    with pytest.raises(ValueError):
        Instance("bad", 2, np.array([[0, -1], [1, 0]]))


def test_instance_rejects_wrong_shape():
    with pytest.raises(ValueError):
        Instance("bad", 3, np.zeros((2, 2)))


def test_instance_matrix_is_read_only():
    inst = random_instance(4, (1, 9), seed=1)
    with pytest.raises(ValueError):
        inst.distances[0, 1] = 99


def test_registry_round_trip(tmp_path):
    path = tmp_path / "optima.txt"
    save_registry({"br17": 39, "ft53": 6905}, path)
    assert load_registry(path) == {"br17": 39, "ft53": 6905}
    first = path.read_text()
    save_registry(load_registry(path), path)
    assert path.read_text() == first  # idempotent rewrite


def test_registry_comments_and_errors(tmp_path):
    path = tmp_path / "optima.txt"
    path.write_text("# comment\nbr17 39   # trailing\n\n")
    assert load_registry(path) == {"br17": 39}
    path.write_text("br17\n")
    with pytest.raises(ParseError):
        load_registry(path)


def test_load_instance_picks_up_sibling_registry(br17):
    assert br17.known_optimum == 39


def test_load_instance_name_falls_back_to_stem(tmp_path):
    text = THREE_CITY.replace("NAME: toy3\n", "")
    path = tmp_path / "nameless.atsp"
    path.write_text(text)
    assert load_instance(path).name == "nameless"
