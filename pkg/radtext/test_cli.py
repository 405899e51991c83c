import os
import sys

import pandas as pd
import pytest

from radtext import bioc_model, cdm_interop, cli, config
from radtext.errors import EXIT_DATA, EXIT_ORDER, EXIT_USAGE

STAGES = ["secsplit", "ssplit", "ner", "parse", "tree2dep", "neg"]


@pytest.fixture
def report(tmp_path):
    with open(config.resource_path(config.SAMPLE_REPORT_FILE), encoding="utf-8") as fp:
        text = fp.read()
    path = tmp_path / "report.txt"
    path.write_text(text, encoding="utf-8")
    return path


def normalized(path):
    return bioc_model.serialize_bioc_xml(bioc_model.read_collection(str(path)))


@pytest.mark.parametrize(
    "argv",
    [[], ["bogus"], ["ner", "-o", "out.xml"], ["ssplit", "-i", "in.txt"], ["ssplit", "-i", "a", "-o", "b", "--jobs", "0"]],
)
def test_usage_errors_exit_64(argv):
    assert cli.main(argv) == EXIT_USAGE


def test_missing_input_file_is_usage(tmp_path):
    assert cli.main(["ssplit", "-i", str(tmp_path / "nope.xml"), "-o", str(tmp_path / "o.xml")]) == EXIT_USAGE


def test_neg_without_ner_exits_2(tmp_path, report, capsys):
    split = tmp_path / "split.xml"
    assert cli.main(["ssplit", "-i", str(report), "-o", str(split)]) == 0
    assert cli.main(["neg", "-i", str(split), "-o", str(tmp_path / "neg.xml")]) == EXIT_ORDER
    assert "ner" in capsys.readouterr().err
    assert not os.path.exists(tmp_path / "neg.xml")


def test_malformed_xml_exits_65(tmp_path):
    bad = tmp_path / "bad.xml"
    bad.write_bytes(b"<collection><source>")
    assert cli.main(["ssplit", "-i", str(bad), "-o", str(tmp_path / "o.xml")]) == EXIT_DATA


def test_run_equals_composed_commands(tmp_path, report):
    chained = tmp_path / "chained.xml"
    assert cli.main(["run", "-i", str(report), "-o", str(chained), "--annotators", ",".join(STAGES)]) == 0
    current = report
    for name in STAGES:
        nxt = tmp_path / f"step.{name}.xml"
        assert cli.main([name, "-i", str(current), "-o", str(nxt)]) == 0
        current = nxt
    assert normalized(chained) == normalized(current)


def test_run_rejects_unknown_annotator(tmp_path, report):
    argv = ["run", "-i", str(report), "-o", str(tmp_path / "o.xml"), "--annotators", "ssplit,magic"]
    assert cli.main(argv) == EXIT_USAGE


def test_run_misordered_annotators_exit_2(tmp_path, report):
    argv = ["run", "-i", str(report), "-o", str(tmp_path / "o.xml"), "--annotators", "ner,ssplit"]
    assert cli.main(argv) == EXIT_ORDER


def test_bioc2cdm_writes_note_nlp(tmp_path, report):
    annotated = tmp_path / "annotated.xml"
    cli.main(["run", "-i", str(report), "-o", str(annotated), "--annotators", ",".join(STAGES)])
    table = tmp_path / "note_nlp.csv"
    assert cli.main(["bioc2cdm", "-i", str(annotated), "-o", str(table)]) == 0
    frame = pd.read_csv(table, dtype=str, keep_default_na=False)
    assert list(frame.columns) == cdm_interop.NOTE_NLP_COLUMNS
    assert len(frame.columns) == 14
    pneumothorax = frame[frame["lexical_variant"] == "pneumothorax"].iloc[0]
    assert pneumothorax["term_exists"] == "False"
    assert pneumothorax["note_id"] == "report"


def test_cdm2bioc_with_notes(tmp_path, report):
    annotated = tmp_path / "annotated.xml"
    cli.main(["run", "-i", str(report), "-o", str(annotated), "--annotators", "secsplit,ssplit,ner"])
    table = tmp_path / "note_nlp.csv"
    cli.main(["bioc2cdm", "-i", str(annotated), "-o", str(table)])
    notes = tmp_path / "notes.csv"
    pd.DataFrame({"note_id": ["report"], "note_text": [report.read_text(encoding="utf-8")]}).to_csv(notes, index=False)
    back = tmp_path / "back.xml"
    assert cli.main(["cdm2bioc", "-i", str(table), "-o", str(back), "--notes", str(notes)]) == 0
    collection = bioc_model.read_collection(str(back))
    assert "cdm2bioc" in bioc_model.stages_run(collection)
    assert any(a.text == "pneumothorax" for _, a in bioc_model.iter_annotations(collection.documents[0]))


def test_csv2bioc_columns(tmp_path):
    source = tmp_path / "notes.csv"
    source.write_text("rid,body\nr1,No edema.\n", encoding="utf-8")
    out = tmp_path / "notes.xml"
    assert cli.main(["csv2bioc", "-i", str(source), "-o", str(out), "--id-column", "rid", "--text-column", "body"]) == 0
    collection = bioc_model.read_collection(str(out))
    assert [d.id for d in collection.documents] == ["r1"]
    assert cli.main(["csv2bioc", "-i", str(source), "-o", str(out)]) == EXIT_DATA


def test_collect_command(tmp_path, report):
    annotated = tmp_path / "annotated.xml"
    cli.main(["run", "-i", str(report), "-o", str(annotated), "--annotators", ",".join(STAGES)])
    labels = tmp_path / "labels.csv"
    assert cli.main(["collect", "-i", str(annotated), "-o", str(labels), "--precedence", "negative,uncertain,positive"]) == 0
    assert "C1522460,Tortuous Aorta,positive" in labels.read_text(encoding="utf-8")
    assert cli.main(["collect", "-i", str(annotated), "-o", str(labels), "--precedence", "positive"]) == EXIT_DATA


def test_metrics_file(tmp_path, report):
    metrics = tmp_path / "metrics.prom"
    argv = ["ssplit", "-i", str(report), "-o", str(tmp_path / "o.xml"), "--metrics", str(metrics)]
    assert cli.main(argv) == 0
    assert 'radtext_documents_total{stage="ssplit"}' in metrics.read_text(encoding="utf-8")


def test_download_twice(tmp_path, capsys):
    target = tmp_path / "res"
    assert cli.main(["download", "-o", str(target)]) == 0
    assert capsys.readouterr().out.startswith(f"{len(config.RESOURCE_FILES)} file(s)")
    assert cli.main(["download", "-o", str(target)]) == 0
    assert capsys.readouterr().out.startswith("0 file(s)")


def test_resources_flag_uses_a_copy(tmp_path, report):
    target = tmp_path / "res"
    cli.main(["download", "-o", str(target)])
    (target / config.ABBREVS_FILE).unlink()
    argv = ["ssplit", "-i", str(report), "-o", str(tmp_path / "o.xml"), "--resources", str(target)]
    assert cli.main(argv) == EXIT_DATA


def test_alias_prepends_command(tmp_path, monkeypatch):
    target = tmp_path / "res"
    monkeypatch.setattr(sys, "argv", ["radtext-download", "-o", str(target)])
    assert cli.radtext_download() == 0
    assert os.path.exists(target / config.CONCEPT_VOCAB_FILE)
    assert cli.radtext_neg.__name__ == "radtext_neg"


def test_unexpected_errors_exit_1(monkeypatch, tmp_path):
    def boom(args):
        raise RuntimeError("boom")

    monkeypatch.setitem(cli.COMMANDS, "download", boom)
    assert cli.main(["download", "-o", str(tmp_path)]) == 1
