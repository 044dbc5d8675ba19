import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ransomflow.errors import ParseError
from ransomflow.features import FULL_FEATURES, REDUCED_FEATURES, Dataset
from ransomflow.formats import (IoError, dumps_arff, dumps_csv, export_arff, export_csv, format_number,
                                import_arff, import_csv, load_dataset, loads_arff, loads_csv,
                                save_dataset)

TABLE_ROW = [6, 3232236160, 55559, 1177009456, 80, 7, 854, 12, 1737]

HEADER = """@relation demo
@attribute Label {Goodware,Malware}
@attribute x real
@attribute y numeric
@data
"""


def test_reference_row_serialization():
    ds = Dataset(FULL_FEATURES, [TABLE_ROW], [0], ["s"])
    text = dumps_arff(ds)
    assert "@ATTRIBUTE Label {Goodware,Malware}" in text.splitlines()
    assert text.rstrip("\n").splitlines()[-1] == "Goodware,6,3232236160,55559,1177009456,80,7,854,12,1737"
    assert "@ATTRIBUTE 'Address A' REAL" in text


def test_format_number():
    assert format_number(80.0) == "80"
    assert format_number(0.1) == "0.1"
    assert float(format_number(1 / 3)) == 1 / 3


def test_arff_roundtrip_file(tmp_path, toy_dataset):
    path = tmp_path / "d.arff"
    export_arff(toy_dataset, path)
    assert import_arff(path) == toy_dataset
    first = path.read_bytes()
    export_arff(import_arff(path), path)
    assert path.read_bytes() == first


def test_csv_header_order_and_empty(tmp_path):
    empty = Dataset(REDUCED_FEATURES, np.zeros((0, 7)), [], [])
    path = tmp_path / "e.csv"
    export_csv(empty, path)
    assert path.read_text().splitlines() == ["Label," + ",".join(REDUCED_FEATURES) + ",Group"]
    assert import_csv(path) == empty


def test_save_load_by_extension(tmp_path, toy_dataset):
    for name in ("a.csv", "a.arff"):
        save_dataset(toy_dataset, tmp_path / name)
        assert load_dataset(tmp_path / name) == toy_dataset


def test_unwritable_path(tmp_path, toy_dataset):
    with pytest.raises(IoError):
        export_csv(toy_dataset, tmp_path / "missing" / "x.csv")


def test_case_insensitive_keywords():
    ds = loads_arff(HEADER + "Malware,1,2.5\n% trailing comment\n\nGoodware,0,0\n")
    assert ds.labels == ["Malware", "Goodware"]
    assert ds.X.tolist() == [[1.0, 2.5], [0.0, 0.0]]


@pytest.mark.parametrize("text, line", [
    (HEADER.replace("real", "string"), 3),
    (HEADER + "Malware,1\n", 6),
    (HEADER + "Goodware,1,2\nBenign,1,2\n", 7),
    (HEADER + "Malware,1,?\n", 6),
    (HEADER + "Malware,1,abc\n", 6),
    (HEADER + "{0 Malware}\n", 6),
    (HEADER.replace("@data", "@bogus"), 5),
])
def test_arff_errors_carry_line(text, line):
    with pytest.raises(ParseError) as info:
        loads_arff(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"{line}: ")


def test_arff_requires_class_attribute():
    with pytest.raises(ParseError):
        loads_arff("@relation r\n@attribute x real\n@data\n1\n")


def test_csv_errors():
    with pytest.raises(ParseError):
        loads_csv("")
    with pytest.raises(ParseError) as info:
        loads_csv("Label,x\nMalware,1\nMalware\n")
    assert info.value.line == 3


names = st.text(st.characters(min_codepoint=32, max_codepoint=126), min_size=1, max_size=12)
groups = st.text(st.characters(min_codepoint=32, max_codepoint=126), max_size=8)


@st.composite
def datasets(draw):
    features = tuple(draw(st.lists(names.filter(lambda s: s not in ("Label", "Group")),
                                   min_size=1, max_size=6, unique=True)))
    n = draw(st.integers(0, 25))
    cell = st.one_of(st.integers(0, 2**32), st.floats(0, 1e12, allow_nan=False, allow_infinity=False))
    X = [[draw(cell) for _ in features] for _ in range(n)]
    y = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    g = draw(st.lists(groups, min_size=n, max_size=n))
    rel = draw(names)
    return Dataset(features, np.array(X, dtype=float).reshape(n, len(features)), y, g, rel)


@settings(max_examples=200, deadline=None)
@given(datasets())
def test_roundtrip_randomized(ds):
    back = loads_arff(dumps_arff(ds))
    assert back == ds and back.schema == ds.schema
    via_csv = loads_csv(dumps_csv(ds), relation=ds.relation)
    assert via_csv == ds
    assert dumps_arff(back) == dumps_arff(ds)
