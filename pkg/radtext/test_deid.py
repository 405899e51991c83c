import pytest

from radtext import bioc_model, config, deid, synthetic
from radtext.errors import ConfigError

HEADER = (
    "Patient's Name: LATTE, MONICA\n"
    "Referred by: SAVEM, CARL MD\n"
    "Date Taken: 02/07/2016\n"
    "Date of Report: July 18, 2015\n"
)


@pytest.fixture(scope="module")
def rules():
    return deid.load_phi_rules(config.resource_path(config.PHI_RULES_FILE))


def phi_annotations(document):
    return [a for _, a in bioc_model.iter_annotations(document) if bioc_model.PHI_INFON in a.infons]


def test_bundled_rules_cover_the_categories(rules):
    categories = {r.category for r in rules}
    assert len(categories) >= 5
    assert {"Date", "Person Name", "Degree/license/certificate", "Phone", "MRN"} <= categories


def test_header_spans(rules):
    result = deid.deidentify(bioc_model.new_document("d", HEADER), rules)
    found = [
        (a.locations[0].offset, a.locations[0].length, a.text, a.infons["source_concept"],
         a.infons.get("source_concept_id"))
        for a in phi_annotations(result)
    ]
    assert found == [
        (16, 13, "LATTE, MONICA", "Person Name", "C1547383"),
        (43, 11, "SAVEM, CARL", "Person Name", "C1547383"),
        (55, 2, "MD", "Degree/license/certificate", "C1547754"),
        (70, 10, "02/07/2016", "Date", "C1547350"),
        (97, 13, "July 18, 2015", "Date", "C1547350"),
    ]
    assert [a.id for a in phi_annotations(result)] == ["A0", "A1", "A2", "A3", "A4"]


def test_masking_keeps_length_and_offsets(rules):
    result = deid.deidentify(bioc_model.new_document("d", HEADER), rules)
    text = result.passages[0].text
    assert len(text) == len(HEADER)
    assert text.startswith("Patient's Name: XXXXXXXXXXXXX\n")
    assert text[70:80] == "XXXXXXXXXX"
    assert "Date Taken: " in text
    collection = bioc_model.new_collection()
    collection.documents.append(result)
    assert bioc_model.validate(collection) == []


def test_input_document_is_not_changed(rules):
    document = bioc_model.new_document("d", HEADER)
    deid.deidentify(document, rules)
    assert document.passages[0].text == HEADER
    assert document.passages[0].annotations == []


def test_redact_drops_annotations(rules):
    result = deid.deidentify(bioc_model.new_document("d", HEADER), rules, redact=True)
    assert phi_annotations(result) == []
    assert "LATTE" not in result.passages[0].text


def test_empty_document_is_unchanged(rules):
    result = deid.deidentify(bioc_model.new_document("d", ""), rules)
    assert result.passages[0].text == ""
    assert phi_annotations(result) == []


def test_second_pass_adds_nothing(rules):
    once = deid.deidentify(bioc_model.new_document("d", HEADER), rules)
    twice = deid.deidentify(once, rules)
    assert twice.passages[0].text == once.passages[0].text
    assert len(phi_annotations(twice)) == len(phi_annotations(once))


def test_sentences_follow_the_mask(rules):
    document = bioc_model.new_document("d", "Seen by Dr. Miller today.")
    document.passages[0].sentences.append(bioc_model.new_sentence(0, "Seen by Dr. Miller today."))
    result = deid.deidentify(document, rules)
    assert result.passages[0].sentences[0].text == "Seen by Dr. XXXXXX today."


def test_planted_phi_is_masked(rules):
    notes = synthetic.generate_phi_notes(200, seed=5)
    for note in notes:
        result = deid.deidentify(bioc_model.new_document("n", note.text), rules)
        masked = result.passages[0].text
        assert len(masked) == len(note.text)
        for start, end, _ in note.spans:
            assert set(masked[start:end]) == {"X"}, note.text[start:end]
        covered = set()
        for annotation in phi_annotations(result):
            location = annotation.locations[0]
            covered.update(range(location.offset, location.offset + location.length))
        changed = {i for i, (a, b) in enumerate(zip(note.text, masked)) if a != b}
        assert changed <= covered


def test_bad_regex_names_the_rule(tmp_path):
    path = tmp_path / "rules.yml"
    path.write_text("rules:\n  - name: broken\n    category: Date\n    regex: '(\\d+'\n", encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        deid.load_phi_rules(str(path))
    assert "broken" in str(info.value)


def test_unknown_category_passes_through(tmp_path):
    path = tmp_path / "rules.yml"
    path.write_text(
        "rules:\n  - name: badge\n    category: Badge Number\n    regex: 'BADGE-\\d+'\n",
        encoding="utf-8",
    )
    rules = deid.load_phi_rules(str(path))
    result = deid.deidentify(bioc_model.new_document("d", "Tech BADGE-991 present."), rules)
    annotation = phi_annotations(result)[0]
    assert annotation.infons["source_concept"] == "Badge Number"
    assert "source_concept_id" not in annotation.infons
    assert result.passages[0].text == "Tech XXXXXXXXX present."


def test_priority_breaks_overlaps():
    rules = [
        deid.PhiRule("low", "OTHER", "", deid.re.compile(r"Miller Clinic"), priority=1),
        deid.PhiRule("high", "Person Name", "", deid.re.compile(r"Miller"), priority=5),
    ]
    spans = deid.find_phi_spans("at Miller Clinic", rules)
    assert [(s, e, r.name) for s, e, r in spans] == [(3, 9, "high")]
