# radtext/collect.py
"""
This is the file that merges mention-level results into one label per
document and finding, writes the label table and scores it against gold labels.
"""
from dataclasses import dataclass, asdict

import pandas as pd

try:
    from radtext import bioc_model
    from radtext.config import get_logger
    from radtext.errors import ConfigError
    from radtext.negdetect import is_concept
except ImportError:
    import bioc_model
    from config import get_logger
    from errors import ConfigError
    from negdetect import is_concept

logger = get_logger("collect")

POSITIVE = "positive"
NEGATIVE = "negative"
UNCERTAIN = "uncertain"
ABSENT = "absent"

DEFAULT_PRECEDENCE = (POSITIVE, UNCERTAIN, NEGATIVE)
LABEL_COLUMNS = ["doc_id", "concept_id", "concept_name", "status"]
SUMMARY_COLUMNS = ["concept_id", "concept_name", "Positive", "Negative", "Uncertain", "Total"]


@dataclass(frozen=True)
class LabelRecord:
    doc_id: str
    concept_id: str
    concept_name: str
    status: str


@dataclass(frozen=True)
class Score:
    precision: float
    recall: float
    f1: float
    support: int


def parse_precedence(text):
    """``positive,uncertain,negative`` -> tuple, checked."""
    order = tuple(s.strip().lower() for s in text.split(",") if s.strip())
    if sorted(order) != sorted(DEFAULT_PRECEDENCE):
        raise ConfigError(f"precedence must order {', '.join(DEFAULT_PRECEDENCE)} exactly once, got {text!r}")
    return order


def load_findings(path):
    """This fct reads the finding ids, one per line ('#' comments)."""
    try:
        with open(path, encoding="utf-8") as fp:
            findings = [line.strip() for line in fp if line.strip() and not line.lstrip().startswith("#")]
    except OSError as e:
        raise ConfigError(f"cannot load findings from {path}: {e}") from None
    if len(set(findings)) != len(findings):
        raise ConfigError(f"{path}: duplicate finding id")
    return findings


def mention_status(annotation):
    infons = annotation.infons
    if infons.get("exists") == "True":
        return POSITIVE
    if infons.get("uncertainty") == "True":
        return UNCERTAIN
    if infons.get("negation") == "True":
        return NEGATIVE
    return None


def merge_statuses(statuses, precedence=DEFAULT_PRECEDENCE):
    present = set(s for s in statuses if s)
    for status in precedence:
        if status in present:
            return status
    return ABSENT


def collect_labels(collection, findings, precedence=DEFAULT_PRECEDENCE, names=None):
    """This fct builds one label per document and finding.

    Parameters
    collection : BioCCollection
        Output of the neg stage.
    findings : list of str
        Concept ids to report, in order.
    precedence : tuple of str
        Merge order over the mention statuses; absent is always last.
    names : dict or None
        concept id -> name, used when a finding is never mentioned.

    Returns
    list of LabelRecord
        Sorted by doc_id, then concept_id.
    """
    names = dict(names or {})
    per_document = []
    for document in collection.documents:
        statuses = {f: [] for f in findings}
        for _, annotation in bioc_model.iter_annotations(document):
            if not is_concept(annotation):
                continue
            concept_id = annotation.infons.get("source_concept_id")
            if concept_id not in statuses:
                continue
            names.setdefault(concept_id, annotation.infons.get("source_concept", concept_id))
            statuses[concept_id].append(mention_status(annotation))
        per_document.append((document, statuses))
    records = []
    for document, statuses in per_document:
        for finding in findings:
            records.append(
                LabelRecord(document.id, finding, names.get(finding, finding), merge_statuses(statuses[finding], precedence))
            )
    records.sort(key=lambda r: (r.doc_id, r.concept_id))
    logger.debug("COLLECTED documents=%d records=%d", len(collection.documents), len(records))
    return records


def summary_counts(records):
    """This fct counts statuses per finding; absent rows are left out of Total.

    Returns
    pandas.DataFrame
        Columns concept_id, concept_name, Positive, Negative, Uncertain, Total.
    """
    rows = {}
    for record in records:
        row = rows.setdefault(
            record.concept_id,
            {"concept_id": record.concept_id, "concept_name": record.concept_name,
             "Positive": 0, "Negative": 0, "Uncertain": 0},
        )
        if record.status != ABSENT:
            row[record.status.capitalize()] += 1
    frame = pd.DataFrame(sorted(rows.values(), key=lambda r: r["concept_id"]), columns=SUMMARY_COLUMNS[:-1])
    frame["Total"] = frame[["Positive", "Negative", "Uncertain"]].sum(axis=1).astype(int)
    return frame


def write_labels_csv(records):
    """This fct writes the label table followed by the summary block.

    Returns
    bytes
        UTF-8 CSV; records with no rows give only the header line.
    """
    ordered = sorted(records, key=lambda r: (r.doc_id, r.concept_id))
    labels = pd.DataFrame([asdict(r) for r in ordered], columns=LABEL_COLUMNS)
    text = labels.to_csv(index=False, lineterminator="\n")
    if ordered:
        text += "\n" + summary_counts(ordered).to_csv(index=False, lineterminator="\n")
    return text.encode("utf-8")


def _ratio(num, den):
    return num / den if den else 0.0


def score_labels(records, gold):
    """This fct scores predicted labels against gold labels.

    Every non-absent status is a class; per finding the counts are summed over
    classes, then the macro average is taken over findings that occur.

    Parameters
    records : list of LabelRecord
    gold : dict
        (doc_id, concept_id) -> status; missing pairs are absent.

    Returns
    dict
        concept id -> Score, plus ``"macro"``.
    """
    predicted = {(r.doc_id, r.concept_id): r.status for r in records}
    keys = set(predicted) | set(gold)
    counts = {}
    for key in keys:
        p = predicted.get(key, ABSENT)
        g = gold.get(key, ABSENT)
        c = counts.setdefault(key[1], {"tp": 0, "fp": 0, "fn": 0})
        if p != ABSENT and p == g:
            c["tp"] += 1
            continue
        if p != ABSENT:
            c["fp"] += 1
        if g != ABSENT:
            c["fn"] += 1
    scores = {}
    for concept_id, c in sorted(counts.items()):
        support = c["tp"] + c["fn"]
        if support == 0 and c["fp"] == 0:
            continue
        precision = _ratio(c["tp"], c["tp"] + c["fp"])
        recall = _ratio(c["tp"], support)
        scores[concept_id] = Score(precision, recall, _ratio(2 * precision * recall, precision + recall), support)
    if scores:
        scores["macro"] = Score(
            sum(s.precision for s in scores.values()) / len(scores),
            sum(s.recall for s in scores.values()) / len(scores),
            sum(s.f1 for s in scores.values()) / len(scores),
            sum(s.support for s in scores.values()),
        )
    return scores
