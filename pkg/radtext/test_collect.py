import io

import pandas as pd
import pytest

from radtext import bioc_model, collect, config
from radtext.collect import ABSENT, NEGATIVE, POSITIVE, UNCERTAIN, LabelRecord
from radtext.errors import ConfigError


def mention(ann_id, offset, text, concept_id, **infons):
    values = {"source_concept_id": concept_id, "source_concept": text.capitalize()}
    values.update(infons)
    return bioc_model.new_annotation(ann_id, offset, text, values)


def labelled_collection():
    collection = bioc_model.new_collection()
    text = "No edema. Possible edema. Edema."
    document = bioc_model.new_document("r2", text)
    passage = document.passages[0]
    passage.annotations.append(mention("a0", 3, "edema", "RTX-EDEMA", exists="False", negation="True"))
    passage.annotations.append(mention("a1", 19, "edema", "RTX-EDEMA", exists="False", uncertainty="True"))
    collection.documents.append(document)
    other = bioc_model.new_document("r1", "No pneumothorax.")
    other.passages[0].annotations.append(
        mention("a0", 3, "pneumothorax", "RID5352", exists="False", negation="True")
    )
    collection.documents.append(other)
    return collection


def test_mention_status():
    assert collect.mention_status(mention("a", 0, "x", "C", exists="True")) == POSITIVE
    assert collect.mention_status(mention("a", 0, "x", "C", exists="False", negation="True")) == NEGATIVE
    assert collect.mention_status(mention("a", 0, "x", "C", exists="False", uncertainty="True")) == UNCERTAIN
    assert collect.mention_status(mention("a", 0, "x", "C")) is None


@pytest.mark.parametrize(
    "statuses, precedence, expected",
    [
        ([NEGATIVE, UNCERTAIN], collect.DEFAULT_PRECEDENCE, UNCERTAIN),
        ([NEGATIVE, POSITIVE, UNCERTAIN], collect.DEFAULT_PRECEDENCE, POSITIVE),
        ([NEGATIVE, UNCERTAIN], (NEGATIVE, POSITIVE, UNCERTAIN), NEGATIVE),
        ([], collect.DEFAULT_PRECEDENCE, ABSENT),
        ([None], collect.DEFAULT_PRECEDENCE, ABSENT),
    ],
)
def test_merge_statuses(statuses, precedence, expected):
    assert collect.merge_statuses(statuses, precedence) == expected


def test_parse_precedence():
    assert collect.parse_precedence("Negative, positive,uncertain") == (NEGATIVE, POSITIVE, UNCERTAIN)
    for bad in ("positive,negative", "positive,positive,negative", "positive,negative,maybe"):
        with pytest.raises(ConfigError):
            collect.parse_precedence(bad)


def test_collect_labels_one_row_per_finding():
    records = collect.collect_labels(labelled_collection(), ["RTX-EDEMA", "RID5352", "C1522460"],
                                     names={"C1522460": "Tortuous Aorta"})
    assert records == [
        LabelRecord("r1", "C1522460", "Tortuous Aorta", ABSENT),
        LabelRecord("r1", "RID5352", "Pneumothorax", NEGATIVE),
        LabelRecord("r1", "RTX-EDEMA", "Edema", ABSENT),
        LabelRecord("r2", "C1522460", "Tortuous Aorta", ABSENT),
        LabelRecord("r2", "RID5352", "Pneumothorax", ABSENT),
        LabelRecord("r2", "RTX-EDEMA", "Edema", UNCERTAIN),
    ]


def test_unlisted_concepts_are_ignored():
    records = collect.collect_labels(labelled_collection(), ["RID5352"])
    assert {r.concept_id for r in records} == {"RID5352"}


def test_summary_counts():
    records = collect.collect_labels(labelled_collection(), ["RTX-EDEMA", "RID5352"])
    frame = collect.summary_counts(records)
    assert list(frame.columns) == collect.SUMMARY_COLUMNS
    edema = frame.set_index("concept_id").loc["RTX-EDEMA"]
    assert (edema["Positive"], edema["Negative"], edema["Uncertain"], edema["Total"]) == (0, 0, 1, 1)


def test_labels_csv_has_both_blocks():
    records = collect.collect_labels(labelled_collection(), ["RTX-EDEMA", "RID5352"])
    text = collect.write_labels_csv(records).decode("utf-8")
    labels_block, summary_block = text.split("\n\n")
    labels = pd.read_csv(io.StringIO(labels_block))
    assert list(labels.columns) == collect.LABEL_COLUMNS
    assert len(labels) == 4
    summary = pd.read_csv(io.StringIO(summary_block))
    assert list(summary.columns) == collect.SUMMARY_COLUMNS
    assert summary["Total"].sum() == 2


def test_labels_csv_empty():
    assert collect.write_labels_csv([]).decode("utf-8") == ",".join(collect.LABEL_COLUMNS) + "\n"


def test_score_perfect_and_partial():
    gold = {("r1", "RID5352"): NEGATIVE, ("r2", "RTX-EDEMA"): UNCERTAIN}
    records = collect.collect_labels(labelled_collection(), ["RTX-EDEMA", "RID5352"])
    scores = collect.score_labels(records, gold)
    assert scores["macro"].f1 == 1.0
    assert scores["macro"].support == 2

    wrong = {("r1", "RID5352"): NEGATIVE, ("r2", "RTX-EDEMA"): POSITIVE}
    scores = collect.score_labels(records, wrong)
    assert scores["RTX-EDEMA"].precision == 0.0
    assert scores["RTX-EDEMA"].recall == 0.0
    assert scores["RID5352"].f1 == 1.0
    assert scores["macro"].f1 == pytest.approx(0.5)


def test_score_nothing_to_score():
    assert collect.score_labels([LabelRecord("r", "C", "c", ABSENT)], {}) == {}


def test_bundled_findings():
    findings = collect.load_findings(config.resource_path(config.FINDINGS_FILE))
    assert "C1522460" in findings
    assert len(findings) == len(set(findings))


def test_findings_file_errors(tmp_path):
    path = tmp_path / "findings.txt"
    path.write_text("C1\nC1\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        collect.load_findings(str(path))
    with pytest.raises(ConfigError):
        collect.load_findings(str(tmp_path / "nope.txt"))
