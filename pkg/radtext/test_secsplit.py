import pytest

from radtext import bioc_model, config, secsplit
from radtext.errors import ConfigError
from radtext.secsplit import SectionTitle, SectionTitleVocab


@pytest.fixture(scope="module")
def vocab():
    return secsplit.load_section_vocab(config.resource_path(config.SECTION_VOCAB_FILE))


@pytest.fixture(scope="module")
def sample_text():
    with open(config.resource_path(config.SAMPLE_REPORT_FILE), encoding="utf-8") as fp:
        return fp.read()


def layout(document):
    return [
        (p.offset, p.text, p.infons.get("type"), p.infons.get("section_concept_id"))
        for p in document.passages
    ]


def test_bundled_vocab_titles(vocab):
    assert len(vocab) >= 6
    for title in ["INDICATION", "COMPARISON", "TECHNIQUE", "FINDINGS", "IMPRESSION", "CLINICAL STATEMENT"]:
        assert vocab.lookup(title) is not None
    assert vocab.lookup("findings").section_concept == "observations section"


def test_sample_report_passages(vocab, sample_text):
    result = secsplit.split_sections(bioc_model.new_document("r", sample_text), vocab)
    passages = layout(result)
    assert passages[0] == (0, "INDICATION:", "title", "RID13166")
    assert passages[1][0] == 12
    assert passages[1][1] == "Please evaluate for pneumonia, effusions, edema"
    assert passages[1][3] == "RID13166"
    assert passages[2] == (60, "FINDINGS:", "title", "RID28486")
    assert passages[3][0] == 70
    assert passages[3][1].startswith("PA and lateral radiographs")
    assert passages[4][1] == "IMPRESSION:"
    assert len(passages) == 6


def test_passages_match_document_text(vocab, sample_text):
    result = secsplit.split_sections(bioc_model.new_document("r", sample_text), vocab)
    for passage in result.passages:
        assert sample_text[passage.offset:passage.offset + len(passage.text)] == passage.text
    rebuilt = bioc_model.document_text(result)
    assert rebuilt.split() == sample_text.split()


def test_no_headers_gives_one_body(vocab):
    result = secsplit.split_sections(bioc_model.new_document("r", "The lungs are clear."), vocab)
    assert layout(result) == [(0, "The lungs are clear.", None, None)]
    assert result.passages[0].infons == {}


def test_unknown_header_has_no_concept():
    small = SectionTitleVocab([
        SectionTitle("INDICATION", "clinical information section", "RID13166"),
        SectionTitle("FINDINGS", "observations section", "RID28486"),
    ])
    text = "FINDINGS: Clear.\nIMPRESSION: Normal."
    result = secsplit.split_sections(bioc_model.new_document("r", text), small)
    title = result.passages[2]
    assert title.text == "IMPRESSION:"
    assert title.infons == {"type": "title"}


def test_vocab_title_in_lowercase_is_a_header(vocab):
    result = secsplit.split_sections(bioc_model.new_document("r", "Findings: clear lungs."), vocab)
    assert layout(result) == [
        (0, "Findings:", "title", "RID28486"),
        (10, "clear lungs.", None, "RID28486"),
    ]


def test_custom_single_entry_vocab(tmp_path):
    path = tmp_path / "titles.csv"
    path.write_text("title,section_concept,section_concept_id\nFINDINGS,observations section,RID28486\n",
                    encoding="utf-8")
    small = secsplit.load_section_vocab(str(path))
    text = "INDICATION: Cough.\nFINDINGS: Clear."
    result = secsplit.split_sections(bioc_model.new_document("r", text), small)
    concepts = [p.infons.get("section_concept_id") for p in result.passages if p.infons.get("type") == "title"]
    assert concepts == [None, "RID28486"]


def test_duplicate_title_is_an_error(tmp_path):
    path = tmp_path / "titles.csv"
    path.write_text(
        "title,section_concept,section_concept_id\n"
        "FINDINGS,observations section,RID28486\n"
        "FINDINGS,observations section,RID28486\n",
        encoding="utf-8",
    )
    with pytest.raises(ConfigError):
        secsplit.load_section_vocab(str(path))


def test_existing_annotations_move_with_their_text(vocab):
    document = bioc_model.new_document("r", "FINDINGS: No edema.")
    document.passages[0].annotations.append(bioc_model.new_annotation("a1", 13, "edema"))
    result = secsplit.split_sections(document, vocab)
    assert [a.id for a in result.passages[1].annotations] == ["a1"]
    collection = bioc_model.new_collection()
    collection.documents.append(result)
    assert bioc_model.validate(collection) == []
