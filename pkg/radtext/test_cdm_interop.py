import random

import pandas as pd
import pytest

from radtext import bioc_model, cdm_interop, synthetic
from radtext.cdm_interop import CdmNoteNlpRow, NoteRow
from radtext.errors import BiocValidationError, ConfigError, ConversionError, DataError

TORTUOUS = "tortuosity of the thoracic aorta"


def tortuous_collection():
    collection = bioc_model.new_collection(date="2022-01-14")
    collection.infons["nlp_system"] = "RadText"
    text = " " * 518 + TORTUOUS + "."
    document = bioc_model.new_document("report1", text)
    document.passages[0].annotations.append(
        bioc_model.new_annotation(
            "a0", 518, TORTUOUS,
            {"source": "UMLS", "source_concept_id": "C1522460", "source_concept": "Tortuous Aorta"},
        )
    )
    collection.documents.append(document)
    return collection


def test_bioc2cdm_golden_row():
    rows = cdm_interop.bioc2cdm(tortuous_collection())
    assert len(rows) == 1
    row = rows[0]
    assert row.note_nlp_id == "report1.a0"
    assert row.note_id == "report1"
    assert row.offset == 518
    assert row.lexical_variant == TORTUOUS
    assert row.note_nlp_source_concept_id == "C1522460"
    assert row.note_nlp_concept_id == ""
    assert row.nlp_system == "RadText"
    assert row.nlp_date == "2022-01-14"
    assert TORTUOUS in row.snippet
    assert row.term_modifiers == "source=UMLS; source_concept=Tortuous Aorta"


def test_cdm2bioc_golden_annotation():
    rows = cdm_interop.bioc2cdm(tortuous_collection())
    collection = cdm_interop.cdm2bioc(rows)
    annotation = collection.documents[0].passages[0].annotations[0]
    assert annotation.id == "a0"
    assert annotation.locations[0].offset == 518
    assert annotation.locations[0].length == len(TORTUOUS)
    assert annotation.infons["source_concept_id"] == "C1522460"


def test_negation_fallback_for_term_exists():
    collection = tortuous_collection()
    annotation = collection.documents[0].passages[0].annotations[0]
    annotation.infons["negation"] = "True"
    assert cdm_interop.bioc2cdm(collection)[0].term_exists == "False"
    annotation.infons["exists"] = "True"
    assert cdm_interop.bioc2cdm(collection)[0].term_exists == "True"


def test_empty_inputs():
    collection = bioc_model.new_collection()
    collection.documents.append(bioc_model.new_document("d", "nothing here"))
    assert cdm_interop.bioc2cdm(collection) == []
    assert cdm_interop.cdm2bioc([]).documents == []


def test_tokens_are_not_findings():
    collection = tortuous_collection()
    collection.documents[0].passages[0].annotations.append(
        bioc_model.new_annotation("T0", 518, "tortuosity", {"tag": "NN", "lemma": "tortuosity"})
    )
    assert [r.note_nlp_id for r in cdm_interop.bioc2cdm(collection)] == ["report1.a0"]


def test_missing_location_names_the_annotation():
    collection = tortuous_collection()
    collection.documents[0].passages[0].annotations[0].locations = []
    with pytest.raises(ConversionError) as info:
        cdm_interop.bioc2cdm(collection)
    assert "a0" in str(info.value)


def test_sentence_is_the_snippet():
    collection = bioc_model.new_collection()
    document = bioc_model.new_document("d", "Heart is normal. No pneumothorax.")
    sentence = bioc_model.new_sentence(17, "No pneumothorax.")
    sentence.annotations.append(bioc_model.new_annotation("a0", 20, "pneumothorax"))
    document.passages[0].sentences.append(sentence)
    collection.documents.append(document)
    assert cdm_interop.bioc2cdm(collection)[0].snippet == "No pneumothorax."


def test_section_comes_from_passage():
    collection = bioc_model.new_collection()
    document = bioc_model.new_document("d", "")
    title = bioc_model.new_passage(0, "FINDINGS:", {"section_concept_id": "RID13166"})
    body = bioc_model.new_passage(10, "No edema.", {"section_concept_id": "RID13166"})
    body.annotations.append(bioc_model.new_annotation("a0", 13, "edema"))
    document.passages = [title, body]
    collection.documents.append(document)
    assert cdm_interop.bioc2cdm(collection)[0].section_concept_id == "RID13166"


def test_random_rows_round_trip():
    rows = synthetic.random_note_nlp_rows(500, random.Random(11))
    assert len({r.note_nlp_id for r in rows}) == 500
    again = cdm_interop.bioc2cdm(cdm_interop.cdm2bioc(rows))
    assert again == rows


def test_random_rows_survive_csv():
    rows = synthetic.random_note_nlp_rows(200, random.Random(3))
    data = cdm_interop.write_note_nlp_csv(rows)
    assert data.split(b"\n", 1)[0].decode() == ",".join(cdm_interop.NOTE_NLP_COLUMNS)
    assert cdm_interop.read_note_nlp_csv(data) == rows


def test_duplicate_note_nlp_id():
    rows = synthetic.random_note_nlp_rows(3, random.Random(1))
    rows[1].note_nlp_id = rows[0].note_nlp_id
    with pytest.raises(DataError):
        cdm_interop.cdm2bioc(rows)


def note_row(note_nlp_id, offset, word):
    return CdmNoteNlpRow(note_nlp_id, "d", "", "No edema. No effusion.", offset, word, "", "",
                         "RadText", "2022-01-14", "", "False", "", "")


def test_annotation_ids_never_clash_within_a_note():
    rows = [note_row("x", 3, "edema"), note_row("d.x", 13, "effusion"), note_row("d.x~1", 3, "edema")]
    notes = [NoteRow("d", "No edema. No effusion.")]
    collection = cdm_interop.cdm2bioc(rows, notes)
    annotations = collection.documents[0].passages[0].annotations
    assert [a.id for a in annotations] == ["x", "x~1", "x~1~1"]
    assert bioc_model.validate(collection) == []
    assert bioc_model.validate(cdm_interop.cdm2bioc(rows)) == []
    assert cdm_interop.bioc2cdm(collection) == rows


def test_notes_are_checked_against_offsets():
    row = CdmNoteNlpRow("n1.a0", "n1", "", "", 3, "edema", "", "", "RadText", "2022-01-14",
                        "", "", "", "")
    collection = cdm_interop.cdm2bioc([row], [NoteRow("n1", "No edema.")])
    assert bioc_model.validate(collection) == []
    row.offset = 30
    with pytest.raises(BiocValidationError):
        cdm_interop.cdm2bioc([row], [NoteRow("n1", "No edema.")])
    with pytest.raises(DataError):
        cdm_interop.cdm2bioc([row], [NoteRow("other", "text")])


def test_modifiers_round_trip():
    infons = {"snippet": "x", "negation": "True", "negbio_pattern_id": "nn180"}
    text = cdm_interop.format_modifiers(infons)
    assert text == "negation=True; negbio_pattern_id=nn180"
    assert cdm_interop.parse_modifiers(text) == {"negation": "True", "negbio_pattern_id": "nn180"}
    assert cdm_interop.parse_modifiers("free text; no pairs") == {"modifiers": "free text; no pairs"}


def test_csv2bioc_keeps_quotes_and_newlines():
    frame = pd.DataFrame(
        {"id": ["r1", "r2"], "text": ['He said "no edema",\nthen left.', "FINDINGS: clear."]}
    )
    data = frame.to_csv(index=False).encode("utf-8")
    collection = cdm_interop.csv2bioc(data, "id", "text")
    assert [d.id for d in collection.documents] == ["r1", "r2"]
    assert collection.documents[0].passages[0].text == 'He said "no edema",\nthen left.'
    assert all(d.passages[0].offset == 0 for d in collection.documents)


def test_csv2bioc_header_only_and_missing_column():
    assert cdm_interop.csv2bioc(b"note_id,note_text\n").documents == []
    with pytest.raises(ConfigError):
        cdm_interop.csv2bioc(b"id,body\nr1,text\n")
