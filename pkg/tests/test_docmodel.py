"""Ingestion parsing, validation warnings, serialization round trips."""

from __future__ import annotations

import json
import re

import pytest

from bankspread.docmodel import (
    ParseError,
    StatementDocument,
    TableCategory,
    TsrClass,
    parse_document,
    serialize_document,
    validate_document,
    write_document,
)


def minimal_doc() -> dict:
    return {
        "pages": [{"index": 0, "width": 1700, "height": 2200, "dpi": 200}],
        "tdc": [
            {"page": 0, "label": "Credit", "score": 0.93, "box": [100, 100, 800, 400]},
            {"page": 0, "label": "Table_caption", "score": 0.88, "box": [100, 60, 400, 85]},
            {"page": 0, "label": "Table_header", "score": 0.9, "box": [104, 104, 796, 126]},
        ],
        "tsr": [
            {"page": 0, "label": "Table", "score": 0.95, "box": [100, 100, 800, 400]},
            {"page": 0, "label": "TableRow", "score": 0.9, "box": [100, 100, 800, 128]},
            {"page": 0, "label": "TableColumn", "score": 0.9, "box": [100, 100, 300, 400]},
        ],
        "ocr": [
            {"page": 0, "text": "DEPOSITS", "box": [100, 64, 170, 80], "confidence": 0.99},
            {"page": 0, "text": "DATE", "box": [110, 106, 150, 122]},
        ],
        "summary": {"opening_cents": 100000, "closing_cents": 85000, "currency": "USD"},
    }


def test_parse_minimal_document():
    doc = parse_document(minimal_doc())
    assert len(doc.pages) == 1
    assert doc.pages[0].dpi == 200
    assert len(doc.tdc_objects) == 3
    assert len(doc.tsr_objects) == 3
    assert len(doc.ocr) == 2
    assert doc.summary is not None and doc.summary.opening_cents == 100000
    assert doc.parse_warnings == []
    assert doc.tdc_objects[0].label is TableCategory.CREDIT
    assert doc.tsr_objects[0].label is TsrClass.TABLE
    assert doc.ocr[1].confidence is None


def test_parse_from_path(tmp_path):
    path = tmp_path / "doc.json"
    path.write_text(json.dumps(minimal_doc()), encoding="utf-8")
    doc = parse_document(path)
    assert len(doc.pages) == 1
    # str paths work too
    assert len(parse_document(str(path)).ocr) == 2


def test_credit_debit_alias_accepted():
    data = minimal_doc()
    data["tdc"][0]["label"] = "Credit/Debit"
    doc = parse_document(data)
    assert doc.tdc_objects[0].label is TableCategory.CREDIT_DEBIT
    # canonical spelling parses to the same label
    data["tdc"][0]["label"] = "CreditDebit"
    assert parse_document(data).tdc_objects[0].label is TableCategory.CREDIT_DEBIT


def test_summary_is_optional():
    data = minimal_doc()
    del data["summary"]
    assert parse_document(data).summary is None


def test_boxes_clamped_to_page():
    data = minimal_doc()
    data["tdc"][0]["box"] = [-50, -10, 2000, 2500]
    doc = parse_document(data)
    assert doc.tdc_objects[0].box.as_tuple() == (0, 0, 1700, 2200)


def test_unknown_fields_warn_but_parse():
    data = minimal_doc()
    data["tdc"][0]["rotation"] = 0.5
    data["extra_top_level"] = {}
    doc = parse_document(data)
    assert len(doc.parse_warnings) == 2
    assert any("tdc[0]" in w and "rotation" in w for w in doc.parse_warnings)
    assert any("extra_top_level" in w for w in doc.parse_warnings)


@pytest.mark.parametrize(
    "mutate, fragment",
    [
        (lambda d: d.pop("pages"), "pages"),
        (lambda d: d["tdc"].__setitem__(0, {**d["tdc"][0], "label": "Widget"}), "tdc[0]"),
        (lambda d: d["tsr"].__setitem__(1, {**d["tsr"][1], "label": "Credit"}), "tsr[1]"),
        (lambda d: d["tdc"][0].__setitem__("box", [500, 100, 100, 400]), "x2 < x1"),
        (lambda d: d["tdc"][0].__setitem__("box", [100, 400, 500, 100]), "y2 < y1"),
        (lambda d: d["tdc"][0].__setitem__("score", 1.4), "score"),
        (lambda d: d["ocr"][0].__setitem__("confidence", -0.1), "confidence"),
        (lambda d: d["ocr"][0].__setitem__("text", ""), "text"),
        (lambda d: d["ocr"][0].__setitem__("page", 7), "missing page"),
        (lambda d: d["summary"].pop("closing_cents"), "closing_cents"),
        (lambda d: d["summary"].__setitem__("opening_cents", 12.5), "integer cents"),
        (lambda d: d["pages"].append({"index": 0, "width": 10, "height": 10}), "duplicate"),
        (lambda d: d["tdc"][0].pop("box"), "box"),
    ],
)
def test_parse_errors_name_the_offender(mutate, fragment):
    data = minimal_doc()
    mutate(data)
    with pytest.raises(ParseError, match=re.escape(fragment)):
        parse_document(data)


def test_serialize_round_trip():
    doc = parse_document(minimal_doc())
    again = parse_document(serialize_document(doc))
    assert again == doc


def test_serialize_omits_absent_optionals():
    data = minimal_doc()
    del data["summary"]
    del data["pages"][0]["dpi"]
    del data["ocr"][0]["confidence"]
    out = serialize_document(parse_document(data))
    assert "summary" not in out
    assert "dpi" not in out["pages"][0]
    assert "confidence" not in out["ocr"][0]


def test_write_document_bytes_stable(tmp_path):
    doc = parse_document(minimal_doc())
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    write_document(doc, p1)
    write_document(doc, p2)
    blob = p1.read_bytes()
    assert blob == p2.read_bytes()
    assert blob.endswith(b"\n")
    assert parse_document(p1) == doc


def test_validate_flags_page_without_words():
    data = minimal_doc()
    data["ocr"] = []
    warnings = validate_document(parse_document(data))
    assert any("no OCR words" in w for w in warnings)


def test_validate_flags_table_without_rows():
    data = minimal_doc()
    data["tsr"] = []
    warnings = validate_document(parse_document(data))
    assert any("no overlapping row" in w for w in warnings)


def test_validate_flags_exact_duplicates():
    data = minimal_doc()
    data["tdc"].append(dict(data["tdc"][0]))
    warnings = validate_document(parse_document(data))
    assert any("duplicate" in w for w in warnings)


def test_validate_clean_document_is_quiet():
    assert validate_document(parse_document(minimal_doc())) == []


def test_page_accessors():
    doc = parse_document(minimal_doc())
    assert doc.page(0).width == 1700
    assert len(doc.words_on_page(0)) == 2
    assert doc.words_on_page(3) == []
    assert len(doc.tdc_on_page(0)) == 3
    assert len(doc.tsr_on_page(0)) == 3


def test_document_equality_ignores_warnings():
    a = parse_document(minimal_doc())
    noisy = minimal_doc()
    noisy["stray"] = 1
    b = parse_document(noisy)
    assert b.parse_warnings and not a.parse_warnings
    assert a == b  # warnings are advisory, not content


def test_statement_document_is_plain_data():
    doc = parse_document(minimal_doc())
    assert isinstance(doc, StatementDocument)
    assert doc.tdc_objects[0].score == pytest.approx(0.93)
