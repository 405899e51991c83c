import random

from radtext import synthetic


def test_reports_are_seeded():
    first = synthetic.generate_reports(5, seed=3)
    again = synthetic.generate_reports(5, seed=3)
    assert [r.text for r in first] == [r.text for r in again]
    assert [r.doc_id for r in first] == ["report0000", "report0001", "report0002", "report0003", "report0004"]


def test_gold_lists_only_mentioned_findings():
    for report in synthetic.generate_reports(30, seed=8):
        assert set(report.gold) <= set(synthetic.FINDING_PHRASES)
        assert set(report.gold.values()) <= {"positive", "negative", "uncertain"}
        for concept_id in report.gold:
            assert any(p in report.text.lower() for p in synthetic.FINDING_PHRASES[concept_id])
        assert report.text.startswith("INDICATION: ")


def test_reports_collection_keeps_ids():
    reports = synthetic.generate_reports(3)
    collection = synthetic.reports_collection(reports)
    assert [d.id for d in collection.documents] == [r.doc_id for r in reports]
    assert collection.documents[1].passages[0].text == reports[1].text


def test_phi_spans_point_at_the_planted_text():
    for note in synthetic.generate_phi_notes(20, seed=2):
        categories = [c for _, _, c in note.spans]
        assert categories.count("Date") == 3
        assert {"Person Name", "Degree/license/certificate", "Phone", "MRN"} <= set(categories)
        for start, end, category in note.spans:
            chunk = note.text[start:end]
            assert chunk.strip() == chunk and chunk
            if category == "Degree/license/certificate":
                assert chunk == "MD"


def test_random_trees_are_valid():
    rng = random.Random(0)
    for _ in range(100):
        graph = synthetic.random_tree(rng)
        graph.validate()
        assert 1 <= len(graph.nodes) <= 8


def test_random_patterns_have_a_focus():
    rng = random.Random(0)
    for _ in range(100):
        pattern = synthetic.random_pattern(rng)
        assert pattern.nodes[pattern.focus].name == "f"
        assert len(pattern.steps) == len(pattern.nodes) - 1
