import json

import pytest

from mdbs.catalog.model import AttributeDef, LocalClass, LocalSchemaDescriptor, StorageDescriptor
from mdbs.errors import HeaderMismatch
from mdbs.gql.ast import AttrRef, Comparison, Literal
from mdbs.plan import OutputCol, SubQuery, SubWrite
from mdbs.sites.adapters import CsvAdapter, DocumentAdapter, RelationalAdapter, build_adapter
from mdbs.sites.firewall import (
    DENY,
    DROP,
    FORWARD,
    FirewallPolicy,
    FirewallRule,
    firewall_decide,
    server_only_policy,
)
from mdbs.sites.wire import subquery_from_json, subquery_to_json, subwrite_from_json, subwrite_to_json
from mdbs.types import CanonicalType as CT


def _branch_schema(location) -> LocalSchemaDescriptor:
    return LocalSchemaDescriptor(
        site_id="branch",
        classes=(
            LocalClass(
                "docs",
                (
                    AttributeDef("id", CT.INT, nullable=False),
                    AttributeDef("full_name", CT.STRING),
                    AttributeDef("salary", CT.STRING),
                    AttributeDef("dept", CT.STRING),
                ),
            ),
        ),
        storage=StorageDescriptor("JSONL_FILE", str(location)),
    )


def _doc_subquery(predicate=None, pred_casts=(), pred_cols=()) -> SubQuery:
    columns = (
        OutputCol("emp_id", "id", CT.INT, CT.INT),
        OutputCol("name", "full_name", CT.STRING, CT.STRING),
        OutputCol("salary", "salary", CT.FLOAT, CT.STRING, CT.FLOAT),
        OutputCol("dept", "dept", CT.STRING, CT.STRING),
    )
    return SubQuery(
        site_id="branch",
        local_class="docs",
        columns=columns,
        predicate=predicate,
        pred_casts=pred_casts,
        pred_cols=pred_cols,
    )


def test_document_run_cast_and_filter(tmp_path):
    (tmp_path / "docs.jsonl").write_text(
        json.dumps({"id": 9, "full_name": "Bo", "salary": "51000.5", "dept": "R&D"}) + "\n"
    )
    adapter = DocumentAdapter(_branch_schema(tmp_path))
    sq = _doc_subquery(
        predicate=Comparison("salary", ">", Literal(50000.0)),
        pred_casts=(("salary", CT.STRING, CT.FLOAT),),
    )
    rows, skipped = adapter.run_subquery(sq)
    assert rows == [[9, "Bo", 51000.5, "R&D"]]
    assert skipped == 0


def test_document_missing_field_is_null_and_filtered(tmp_path):
    (tmp_path / "docs.jsonl").write_text(
        json.dumps({"id": 1, "full_name": "Ax", "salary": "1.0"}) + "\n"
    )
    adapter = DocumentAdapter(_branch_schema(tmp_path))
    rows, _ = adapter.run_subquery(_doc_subquery())
    assert rows == [[1, "Ax", 1.0, None]]
    filtered, _ = adapter.run_subquery(
        _doc_subquery(predicate=Comparison("dept", "=", Literal("R&D")))
    )
    assert filtered == []  # NULL never compares true


def test_document_cast_failure_skips_row(tmp_path):
    (tmp_path / "docs.jsonl").write_text(
        json.dumps({"id": 1, "full_name": "Ax", "salary": "abc", "dept": "Ops"}) + "\n"
        + json.dumps({"id": 2, "full_name": "By", "salary": "2.5", "dept": "Ops"}) + "\n"
    )
    adapter = DocumentAdapter(_branch_schema(tmp_path))
    rows, skipped = adapter.run_subquery(_doc_subquery())
    assert rows == [[2, "By", 2.5, "Ops"]]
    assert skipped == 1


def test_document_absent_field_uses_declared_default(tmp_path):
    (tmp_path / "docs.jsonl").write_text(json.dumps({"id": 3}) + "\n")
    adapter = DocumentAdapter(_branch_schema(tmp_path))
    columns = (
        OutputCol("emp_id", "id", CT.INT, CT.INT),
        OutputCol("dept", "dept", CT.STRING, CT.STRING, default="R&D", has_default=True),
    )
    sq = SubQuery("branch", "docs", columns)
    rows, _ = adapter.run_subquery(sq)
    assert rows == [[3, "R&D"]]


def _fin_schema(location) -> LocalSchemaDescriptor:
    return LocalSchemaDescriptor(
        site_id="fin",
        classes=(
            LocalClass(
                "CREDIT",
                (
                    AttributeDef("cust_id", CT.INT, nullable=False),
                    AttributeDef("limit", CT.FLOAT),
                ),
            ),
        ),
        storage=StorageDescriptor("CSV_FILE", str(location)),
    )


def _credit_subquery(predicate=None) -> SubQuery:
    return SubQuery(
        site_id="fin",
        local_class="CREDIT",
        columns=(
            OutputCol("cust_id", "cust_id", CT.INT, CT.INT),
            OutputCol("credit_limit", "limit", CT.FLOAT, CT.FLOAT),
        ),
        predicate=predicate,
    )


def test_csv_run_basic(tmp_path):
    (tmp_path / "CREDIT.csv").write_text("cust_id,limit\n7,1000.0\n")
    adapter = CsvAdapter(_fin_schema(tmp_path))
    rows, _ = adapter.run_subquery(_credit_subquery())
    assert rows == [[7, 1000.0]]


def test_csv_empty_file_header_only(tmp_path):
    (tmp_path / "CREDIT.csv").write_text("cust_id,limit\n")
    adapter = CsvAdapter(_fin_schema(tmp_path))
    rows, _ = adapter.run_subquery(_credit_subquery())
    assert rows == []


def test_csv_header_missing_column(tmp_path):
    (tmp_path / "CREDIT.csv").write_text("cust_id\n7\n")
    adapter = CsvAdapter(_fin_schema(tmp_path))
    with pytest.raises(HeaderMismatch):
        adapter.run_subquery(_credit_subquery())


def test_csv_empty_cell_is_null(tmp_path):
    (tmp_path / "CREDIT.csv").write_text("cust_id,limit\n7,\n")
    adapter = CsvAdapter(_fin_schema(tmp_path))
    rows, _ = adapter.run_subquery(_credit_subquery())
    assert rows == [[7, None]]


def _hq_schema(location) -> LocalSchemaDescriptor:
    return LocalSchemaDescriptor(
        site_id="hq",
        classes=(
            LocalClass(
                "EMP",
                (
                    AttributeDef("ENO", CT.INT, nullable=False),
                    AttributeDef("ENAME", CT.STRING),
                    AttributeDef("SAL", CT.FLOAT),
                    AttributeDef("DEPT", CT.STRING),
                ),
            ),
        ),
        storage=StorageDescriptor("SQL_TABLE", str(location)),
    )


def _emp_store(tmp_path):
    (tmp_path / "EMP.csv").write_text(
        "ENO,ENAME,SAL,DEPT\n1,Ann,62000.0,R&D\n2,Bob,48000.0,Sales\n"
    )
    (tmp_path / "dictionary.json").write_text(
        json.dumps({"EMP": {"ENO": "INTEGER", "ENAME": "VARCHAR", "SAL": "DECIMAL", "DEPT": "VARCHAR"}})
    )


def test_relational_translate_matches_fixture(tmp_path):
    _emp_store(tmp_path)
    adapter = RelationalAdapter(_hq_schema(tmp_path))
    sq = SubQuery(
        "hq",
        "EMP",
        columns=(OutputCol("name", "ENAME", CT.STRING, CT.STRING),),
        predicate=Comparison("SAL", ">", Literal(50000.0)),
    )
    assert adapter.translate(sq) == "SELECT ENAME FROM EMP WHERE SAL > 50000.0"


def test_relational_translate_no_predicate(tmp_path):
    _emp_store(tmp_path)
    adapter = RelationalAdapter(_hq_schema(tmp_path))
    sq = SubQuery("hq", "EMP", columns=(OutputCol("name", "ENAME", CT.STRING, CT.STRING),))
    assert adapter.translate(sq) == "SELECT ENAME FROM EMP"


def test_relational_translate_escapes_quotes(tmp_path):
    _emp_store(tmp_path)
    adapter = RelationalAdapter(_hq_schema(tmp_path))
    sq = SubQuery(
        "hq",
        "EMP",
        columns=(OutputCol("name", "ENAME", CT.STRING, CT.STRING),),
        predicate=Comparison("ENAME", "=", Literal("O'Hara")),
    )
    assert adapter.translate(sq).endswith("WHERE ENAME = 'O''Hara'")


def test_relational_run_agrees_with_translated_sql(tmp_path):
    _emp_store(tmp_path)
    adapter = RelationalAdapter(_hq_schema(tmp_path))
    sq = SubQuery(
        "hq",
        "EMP",
        columns=(
            OutputCol("name", "ENAME", CT.STRING, CT.STRING),
            OutputCol("salary", "SAL", CT.FLOAT, CT.FLOAT),
        ),
        predicate=Comparison("SAL", ">", Literal(50000.0)),
    )
    rows, skipped = adapter.run_subquery(sq)
    assert skipped == 0
    # the very SQL text shown by translate() is what ran
    direct = adapter.store.query(adapter.translate(sq))
    assert [list(r) for r in direct] == rows == [["Ann", 62000.0]]


def test_relational_write_and_read_back(tmp_path):
    _emp_store(tmp_path)
    adapter = RelationalAdapter(_hq_schema(tmp_path))
    affected = adapter.apply_write(
        SubWrite("hq", "EMP", "INSERT", values=(("ENO", 3), ("ENAME", "Cy"), ("SAL", 1.5), ("DEPT", "Ops")))
    )
    assert affected == 1
    affected = adapter.apply_write(
        SubWrite(
            "hq",
            "EMP",
            "UPDATE",
            values=(("SAL", 2.5),),
            predicate=Comparison("ENO", "=", Literal(3)),
        )
    )
    assert affected == 1
    affected = adapter.apply_write(
        SubWrite("hq", "EMP", "DELETE", predicate=Comparison("ENO", "=", Literal(1)))
    )
    assert affected == 1
    rows, _ = adapter.run_subquery(
        SubQuery(
            "hq",
            "EMP",
            columns=(
                OutputCol("emp_id", "ENO", CT.INT, CT.INT),
                OutputCol("salary", "SAL", CT.FLOAT, CT.FLOAT),
            ),
        )
    )
    assert sorted(rows) == [[2, 48000.0], [3, 2.5]]


def test_adapter_equivalence_across_kinds(tmp_path):
    """Identical logical data behind the three adapter kinds produces
    identical row multisets for the same sub-query shape."""
    rows_logical = [(1, "Ann", 62000.0), (2, "Bob", None)]

    rel_dir = tmp_path / "rel"
    rel_dir.mkdir()
    (rel_dir / "T.csv").write_text("k,nm,amt\n1,Ann,62000.0\n2,Bob,\n")
    (rel_dir / "dictionary.json").write_text(
        json.dumps({"T": {"k": "INTEGER", "nm": "VARCHAR", "amt": "DECIMAL"}})
    )
    doc_dir = tmp_path / "doc"
    doc_dir.mkdir()
    (doc_dir / "T.jsonl").write_text(
        json.dumps({"k": 1, "nm": "Ann", "amt": 62000.0}) + "\n"
        + json.dumps({"k": 2, "nm": "Bob", "amt": None}) + "\n"
    )
    csv_dir = tmp_path / "csv"
    csv_dir.mkdir()
    (csv_dir / "T.csv").write_text("k,nm,amt\n1,Ann,62000.0\n2,Bob,\n")

    def schema(fmt, location):
        return LocalSchemaDescriptor(
            site_id="s",
            classes=(
                LocalClass(
                    "T",
                    (
                        AttributeDef("k", CT.INT, nullable=False),
                        AttributeDef("nm", CT.STRING),
                        AttributeDef("amt", CT.FLOAT),
                    ),
                ),
            ),
            storage=StorageDescriptor(fmt, str(location)),
        )

    adapters = [
        build_adapter("RELATIONAL", schema("SQL_TABLE", rel_dir)),
        build_adapter("DOCUMENT", schema("JSONL_FILE", doc_dir)),
        build_adapter("CSV", schema("CSV_FILE", csv_dir)),
    ]
    sq = SubQuery(
        "s",
        "T",
        columns=(
            OutputCol("k", "k", CT.INT, CT.INT),
            OutputCol("nm", "nm", CT.STRING, CT.STRING),
            OutputCol("amt", "amt", CT.FLOAT, CT.FLOAT),
        ),
        predicate=Comparison("k", ">=", Literal(1)),
    )
    results = [sorted(map(repr, adapter.run_subquery(sq)[0])) for adapter in adapters]
    assert results[0] == results[1] == results[2]
    assert len(results[0]) == len(rows_logical)


# -- firewall -------------------------------------------------------------------

def test_firewall_first_match_wins():
    policy = FirewallPolicy(
        rules=(
            FirewallRule("mdbs-server", "READ", FORWARD),
            FirewallRule("*", "*", DROP),
        ),
        default=DENY,
    )
    assert firewall_decide(policy, "mdbs-server", "READ") == FORWARD
    assert firewall_decide(policy, "mdbs-server", "WRITE") == DROP
    assert firewall_decide(policy, "someone", "READ") == DROP


def test_firewall_default_applies():
    policy = FirewallPolicy(rules=(FirewallRule("mdbs-server", "*", FORWARD),), default=DENY)
    assert firewall_decide(policy, "intruder", "READ") == DENY


def test_firewall_write_drop_rule():
    policy = FirewallPolicy(rules=(FirewallRule("*", "WRITE", DROP),), default=FORWARD)
    assert firewall_decide(policy, "anyone", "WRITE") == DROP
    assert firewall_decide(policy, "anyone", "READ") == FORWARD


def test_firewall_totality():
    policy = server_only_policy()
    for principal in ("mdbs-server", "x", "", "?"):
        for op in ("READ", "WRITE", "SCHEMA"):
            assert firewall_decide(policy, principal, op) in (FORWARD, DENY, DROP)


# -- wire codecs -------------------------------------------------------------------

def test_subquery_wire_roundtrip():
    sq = _doc_subquery(
        predicate=Comparison("salary", ">", Literal(50000.0)),
        pred_casts=(("salary", CT.STRING, CT.FLOAT),),
        pred_cols=(OutputCol("dept", "dept", CT.STRING, CT.STRING),),
    )
    assert subquery_from_json(json.loads(json.dumps(subquery_to_json(sq)))) == sq


def test_subquery_wire_keyword_named_local_attr():
    sq = SubQuery(
        "fin",
        "CREDIT",
        columns=(OutputCol("credit_limit", "limit", CT.FLOAT, CT.FLOAT),),
        predicate=Comparison("limit", ">", Literal(500.0)),
    )
    assert subquery_from_json(json.loads(json.dumps(subquery_to_json(sq)))) == sq


def test_subwrite_wire_roundtrip():
    sw = SubWrite(
        "hq",
        "EMP",
        "UPDATE",
        values=(("SAL", 2.5), ("DEPT", None)),
        predicate=Comparison("ENAME", "!=", AttrRef("DEPT")),
    )
    assert subwrite_from_json(json.loads(json.dumps(subwrite_to_json(sw)))) == sw
