import numpy as np
import pytest

from conftest import write_rows
from netclust.errors import DataError
from netclust.ingest import (
    IngestConfig,
    drop_identifiers,
    load_csv,
    write_csv,
)


def make_flow_csv(path, n_rows=50, n_cols=83, missing_col=None):
    """CSV shaped like a flow export: 4 identifier columns + numerics."""
    ids = ["Flow ID", "Src IP", "Dst IP", "Timestamp"]
    header = ids + [f"feat_{i}" for i in range(n_cols - len(ids))]
    rows = []
    for r in range(n_rows):
        row = [f"flow-{r}", "10.0.0.1", "10.0.0.2", f"2024-01-01 00:00:{r % 60:02d}"]
        for c in range(n_cols - len(ids)):
            name = header[len(ids) + c]
            if missing_col == name and r % 7 == 0:
                row.append("Infinity")
            else:
                row.append(str(r * 0.5 + c))
        rows.append(row)
    return write_rows(path, header, rows)


def test_load_small_numeric(tmp_path):
    p = write_rows(tmp_path / "t.csv", ["a", "b", "c"], [["1", "2", "3"]])
    t = load_csv(p)
    assert t.n_rows == 1 and t.n_cols == 3
    assert all(c.kind == "numeric" for c in t.columns)
    assert t.column("b").values[0] == 2.0


def test_load_flow_shape(tmp_path):
    p = make_flow_csv(tmp_path / "flows.csv", n_rows=120, n_cols=83)
    t = load_csv(p)
    assert t.n_rows == 120
    assert t.n_cols == 83


def test_infinity_cell_stays_numeric_as_missing(tmp_path):
    p = write_rows(
        tmp_path / "t.csv", ["a", "b"], [["1", "2"], ["Infinity", "4"], ["3", "6"]]
    )
    t = load_csv(p)
    col = t.column("a")
    assert col.kind == "numeric"
    assert np.isnan(col.values[1])
    assert col.n_missing() == 1


def test_categorical_column_detection(tmp_path):
    p = write_rows(tmp_path / "t.csv", ["proto", "len"], [["tcp", "1"], ["udp", "2"]])
    t = load_csv(p)
    assert t.column("proto").kind == "categorical"
    assert t.column("len").kind == "numeric"


def test_missing_file():
    with pytest.raises(DataError, match="not found"):
        load_csv("/nonexistent/nope.csv")


def test_empty_file(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("")
    with pytest.raises(DataError, match="empty"):
        load_csv(p)


def test_ragged_row_names_index(tmp_path):
    p = write_rows(tmp_path / "t.csv", ["a", "b"], [["1", "2"], ["3"]])
    with pytest.raises(DataError, match="ragged row 1"):
        load_csv(p)


def test_duplicate_header(tmp_path):
    p = write_rows(tmp_path / "t.csv", ["a", "a"], [["1", "2"]])
    with pytest.raises(DataError, match="duplicate header"):
        load_csv(p)


def test_no_header_mode(tmp_path):
    p = write_rows(tmp_path / "t.csv", None, [["1", "2"], ["3", "4"]])
    t = load_csv(p, IngestConfig(has_header=False))
    assert t.column_names == ["col_0", "col_1"]
    assert t.n_rows == 2


def test_drop_identifiers_all_present(tmp_path):
    p = make_flow_csv(tmp_path / "flows.csv", n_rows=10, n_cols=83)
    t = drop_identifiers(load_csv(p))
    assert t.n_cols == 79
    for name in ("Flow ID", "Src IP", "Dst IP", "Timestamp"):
        assert name not in t.column_names


def test_drop_identifiers_none_present_warns(tmp_path):
    p = write_rows(tmp_path / "t.csv", ["a", "b"], [["1", "2"]])
    t = load_csv(p)
    with pytest.warns(UserWarning, match="not present"):
        out = drop_identifiers(t)
    assert out == t


def test_drop_identifiers_partial(tmp_path):
    p = write_rows(tmp_path / "t.csv", ["Timestamp", "b"], [["x", "2"]])
    with pytest.warns(UserWarning):
        out = drop_identifiers(load_csv(p))
    assert out.column_names == ["b"]


def test_drop_identifiers_idempotent(tmp_path):
    p = make_flow_csv(tmp_path / "flows.csv", n_rows=10)
    t = drop_identifiers(load_csv(p))
    with pytest.warns(UserWarning):
        again = drop_identifiers(t)
    assert again == t


def test_load_deterministic(tmp_path):
    p = make_flow_csv(tmp_path / "flows.csv", n_rows=30, missing_col="feat_3")
    assert load_csv(p) == load_csv(p)


def test_round_trip(tmp_path):
    p = write_rows(
        tmp_path / "t.csv",
        ["num", "cat"],
        [["1.5", "tcp"], ["Infinity", "udp"], ["2.25", "tcp"]],
    )
    t = load_csv(p)
    out = tmp_path / "rt.csv"
    write_csv(t, out)
    assert load_csv(out) == t
