import json

import pytest
from hypothesis import given, strategies as st

from rot_harness.datasets import (
    Dataset,
    QAInstance,
    adapt_hitab,
    adapt_tablebench,
    adapt_wikitq,
    load_canonical,
    sample,
    write_canonical,
)
from rot_harness.errors import SampleTooLarge, SchemaError
from rot_harness.table import Table


def _inst(i, **kw):
    base = dict(id=f"q{i}", question=f"question {i}?", table=Table.flat(["a"], [[str(i)]]), gold_answers=[str(i)])
    base.update(kw)
    return QAInstance(**base)


def test_load_two_lines(tmp_path):
    p = tmp_path / "d.jsonl"
    write_canonical(p, [_inst(1), _inst(2, dataset="wikitq", qtype="count")])
    got = load_canonical(p)
    assert [g.id for g in got] == ["q1", "q2"]
    assert got[1].dataset is Dataset.WIKITQ and got[1].qtype == "count"
    assert got == [_inst(1), _inst(2, dataset="wikitq", qtype="count")]


def test_load_missing_question_names_line(tmp_path):
    p = tmp_path / "d.jsonl"
    good = json.dumps(_inst(1).to_dict())
    bad = _inst(2).to_dict()
    del bad["question"]
    p.write_text(good + "\n" + json.dumps(bad) + "\n")
    with pytest.raises(SchemaError, match="line 2.*question"):
        load_canonical(p)


def test_load_empty_file(tmp_path):
    p = tmp_path / "d.jsonl"
    p.write_text("")
    assert load_canonical(p) == []


def test_load_rejects_empty_answers_and_duplicates(tmp_path):
    p = tmp_path / "d.jsonl"
    row = _inst(1).to_dict()
    p.write_text(json.dumps(dict(row, gold_answers=[])) + "\n")
    with pytest.raises(SchemaError):
        load_canonical(p)
    p.write_text(json.dumps(row) + "\n" + json.dumps(row) + "\n")
    with pytest.raises(SchemaError, match="duplicate"):
        load_canonical(p)


def test_load_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_canonical(tmp_path / "nope.jsonl")


# WikiTQ release layout: data/*.tsv with a context column pointing at csv/*.csv


@pytest.fixture
def wikitq_root(tmp_path):
    (tmp_path / "csv" / "200-csv").mkdir(parents=True)
    (tmp_path / "csv" / "200-csv" / "1.csv").write_text(
        '"Year","City","Note"\n"2010","Oslo","first"\n"2011","Bergen","say \\"hi\\""\n'
    )
    (tmp_path / "data").mkdir()
    (tmp_path / "data" / "q.tsv").write_text(
        "id\tutterance\tcontext\ttargetValue\n"
        "nt-0\twhich city came first?\tcsv/200-csv/1.csv\tOslo\n"
        "nt-1\tlist both cities\tcsv/200-csv/1.csv\tOslo|Bergen\n"
        "nt-2\tpipe \\p test\tcsv/200-csv/1.csv\ta\\pb\n"
    )
    return tmp_path


def test_wikitq_adapter(wikitq_root):
    got = adapt_wikitq(wikitq_root / "data" / "q.tsv", wikitq_root)
    assert [g.id for g in got] == ["nt-0", "nt-1", "nt-2"]
    assert got[0].table.n_cols == 3 and got[0].table.n_rows == 2
    assert got[0].table.rows[1] == ("2011", "Bergen", 'say "hi"')
    assert got[0].gold_answers == ("Oslo",)
    assert got[1].gold_answers == ("Oslo", "Bergen")
    assert got[2].gold_answers == ("a|b",) and got[2].question == "pipe | test"
    assert all(g.dataset is Dataset.WIKITQ for g in got)


def test_wikitq_missing_table(wikitq_root):
    (wikitq_root / "csv" / "200-csv" / "1.csv").unlink()
    with pytest.raises(OSError):
        adapt_wikitq(wikitq_root / "data" / "q.tsv", wikitq_root)


def test_wikitq_bad_header(tmp_path):
    (tmp_path / "q.tsv").write_text("id\tquestion\n")
    with pytest.raises(SchemaError):
        adapt_wikitq(tmp_path / "q.tsv", tmp_path)


# HiTab: samples JSONL + tables/raw/<table_id>.json with merged header regions

HITAB_RAW = {
    "texts": [
        ["", "2019", "", "2020", ""],
        ["Region", "Male", "Female", "Male", "Female"],
        ["North", 120, 130, 125, 140.5],
    ],
    "top_header_rows_num": 2,
    "left_header_columns_num": 1,
    "merged_regions": [
        {"first_row": 0, "last_row": 0, "first_column": 1, "last_column": 2},
        {"first_row": 0, "last_row": 0, "first_column": 3, "last_column": 4},
    ],
}


def test_hitab_adapter_table_id(tmp_path):
    (tmp_path / "tables" / "raw").mkdir(parents=True)
    (tmp_path / "tables" / "raw" / "t1.json").write_text(json.dumps(HITAB_RAW))
    (tmp_path / "test.jsonl").write_text(
        json.dumps({"id": "h1", "question": "female north 2020?", "table_id": "t1", "answer": [140.5], "aggregation": ["none"]}) + "\n"
    )
    (got,) = adapt_hitab(tmp_path / "test.jsonl")
    assert got.table.header_paths == (("Region",), ("2019", "Male"), ("2019", "Female"), ("2020", "Male"), ("2020", "Female"))
    assert got.table.rows == (("North", "120", "130", "125", "140.5"),)
    assert got.gold_answers == ("140.5",)
    assert got.dataset is Dataset.HITAB and got.qtype == "none"


def test_hitab_adapter_keeps_numeric_literals(tmp_path):
    raw = dict(HITAB_RAW, texts=[["x"], ["1.50"]], top_header_rows_num=1, merged_regions=[])
    (tmp_path / "s.jsonl").write_text('{"id": "h2", "question": "q", "answer": [1.50, 3], "table": %s}\n' % json.dumps(raw))
    (got,) = adapt_hitab(tmp_path / "s.jsonl")
    assert got.gold_answers == ("1.50", "3")
    assert got.table.header_paths == (("x",),)


def test_hitab_missing_field(tmp_path):
    (tmp_path / "s.jsonl").write_text('{"id": "h3", "question": "q", "table": {}}\n')
    with pytest.raises(SchemaError, match="answer"):
        adapt_hitab(tmp_path / "s.jsonl")


# TableBench: JSONL with table as {"columns", "data"} (sometimes JSON-encoded)


def test_tablebench_adapter(tmp_path):
    rows = [
        {"id": "tb1", "qtype": "NumericalReasoning", "question": "total?", "answer": "42",
         "table": {"columns": ["a", "b"], "data": [[1, 2.50], ["x", None]]}},
        {"id": "tb2", "qtype": "FactChecking", "question": "who?", "answer": "Ito",
         "table": json.dumps({"columns": ["name"], "data": [["Ito"]]})},
    ]
    text = "\n".join(json.dumps(r) for r in rows) + "\n"
    (tmp_path / "tb.jsonl").write_text(text.replace("2.5]", "2.50]"))
    got = adapt_tablebench(tmp_path / "tb.jsonl")
    assert got[0].table.rows == (("1", "2.50"), ("x", ""))
    assert got[0].qtype == "NumericalReasoning" and got[0].gold_answers == ("42",)
    assert got[1].table.header_paths == (("name",),) and got[1].qtype == "FactChecking"


def test_tablebench_bad_table(tmp_path):
    (tmp_path / "tb.jsonl").write_text(json.dumps({"id": "t", "question": "q", "answer": "a", "table": {"columns": ["a"]}}) + "\n")
    with pytest.raises(SchemaError):
        adapt_tablebench(tmp_path / "tb.jsonl")


XS = [_inst(i) for i in range(10)]


def test_sample_examples():
    full = sample(XS, len(XS), 5)
    assert sorted(x.id for x in full) == sorted(x.id for x in XS)
    assert sample(XS, 0, 5) == []
    assert sample(XS, 3, 7) == sample(XS, 3, 7)
    with pytest.raises(SampleTooLarge):
        sample(XS, 11, 0)


def test_sample_frozen_value():
    # hash ranking is platform independent; pin it
    assert [x.id for x in sample(XS, 3, 7)] == [x.id for x in sample(list(reversed(XS)), 3, 7)][::-1]


@given(st.integers(0, 10), st.integers(-5, 5))
def test_sample_is_duplicate_free_subset(n, seed):
    got = sample(XS, n, seed)
    ids = [g.id for g in got]
    assert len(ids) == len(set(ids)) == n
    assert set(ids) <= {x.id for x in XS}
