# radtext/synthetic.py
"""
This is the file that makes seeded synthetic data for tests and profiling:
reports with gold labels, notes with planted PHI, random BioC collections,
random NOTE_NLP rows, and random graphs and queries for the matcher.
"""
import random
from dataclasses import dataclass, field

try:
    from radtext import bioc_model
    from radtext.cdm_interop import CdmNoteNlpRow
    from radtext.depgraph import DepEdge, DepGraph, DepNode
    from radtext.negdetect import compile_pattern
except ImportError:
    import bioc_model
    from cdm_interop import CdmNoteNlpRow
    from depgraph import DepEdge, DepGraph, DepNode
    from negdetect import compile_pattern

# ──────────────────────────────
# Reports with gold labels
# ──────────────────────────────
FINDING_PHRASES = {
    "RTX-CALCIFIED-AORTA": ["calcification of the aorta", "aortic calcification"],
    "RTX-PNEUMOMEDIASTINUM": ["pneumomediastinum"],
    "RTX-PNEUMOPERITONEUM": ["pneumoperitoneum"],
    "RTX-SUBCUTANEOUS-EMPHYSEMA": ["subcutaneous emphysema"],
    "C1522460": ["tortuosity of the thoracic aorta", "tortuous aorta"],
}

TEMPLATES = {
    "positive": ["There is {p}.", "{P} is seen."],
    "negative": ["There is no {p}.", "No {p}.", "The lungs are clear without {p}."],
    "uncertain": ["Possible {p}.", "Findings may represent {p}.", "{P} cannot be excluded."],
}

FILLER = [
    "PA and lateral radiographs demonstrate clear lungs.",
    "Heart size is normal.",
]

INDICATIONS = ["Chest pain.", "Shortness of breath.", "Cough."]


@dataclass
class SyntheticReport:
    doc_id: str
    text: str
    gold: dict = field(default_factory=dict)  # concept id -> status, absent left out


def _sentence(rng, status, phrase):
    template = rng.choice(TEMPLATES[status])
    return template.format(p=phrase, P=phrase[0].upper() + phrase[1:])


def generate_reports(n, seed=0):
    """This fct writes ``n`` templated chest reports.

    Each of the five findings is positive, negative, uncertain or absent at
    random, and mentioned at most once, in its own sentence.

    Returns
    list of SyntheticReport
    """
    rng = random.Random(seed)
    reports = []
    for k in range(n):
        sentences = list(FILLER)
        gold = {}
        for concept_id, phrases in FINDING_PHRASES.items():
            status = rng.choice(["positive", "negative", "uncertain", "absent"])
            if status == "absent":
                continue
            gold[concept_id] = status
            sentences.append(_sentence(rng, status, rng.choice(phrases)))
        body = sentences[:2] + rng.sample(sentences[2:], len(sentences) - 2)
        text = (
            f"INDICATION: {rng.choice(INDICATIONS)}\n"
            f"FINDINGS: {' '.join(body)}\n"
            f"IMPRESSION: No acute cardiopulmonary process.\n"
        )
        reports.append(SyntheticReport(f"report{k:04d}", text, gold))
    return reports


def reports_collection(reports):
    collection = bioc_model.new_collection(source="synthetic")
    for report in reports:
        collection.documents.append(bioc_model.new_document(report.doc_id, report.text))
    return collection


# ──────────────────────────────
# Notes with planted PHI
# ──────────────────────────────
LAST_NAMES = ["LATTE", "SAVEM", "SMITH", "JOHNSON", "GARCIA", "MILLER", "DAVIS", "WILLIAMS"]
FIRST_NAMES = ["MONICA", "CARL", "PATRICIA", "JENNIFER", "MICHAEL", "LINDA", "ROBERT", "ELIZABETH"]
MONTHS = ["January", "February", "March", "April", "May", "June", "July", "August",
          "September", "October", "November", "December"]


@dataclass
class PhiNote:
    text: str
    spans: list = field(default_factory=list)  # (start, end, category)


def _date(rng):
    year = rng.randint(1990, 2024)
    month = rng.randint(1, 12)
    day = rng.randint(1, 28)
    style = rng.randrange(3)
    if style == 0:
        return f"{month:02d}/{day:02d}/{year}"
    if style == 1:
        return f"{year}-{month:02d}-{day:02d}"
    return f"{MONTHS[month - 1]} {day}, {year}"


class _NoteBuilder:
    def __init__(self):
        self.parts = []
        self.length = 0
        self.spans = []

    def text(self, chunk):
        self.parts.append(chunk)
        self.length += len(chunk)

    def phi(self, chunk, category):
        self.spans.append((self.length, self.length + len(chunk), category))
        self.text(chunk)

    def build(self):
        return PhiNote("".join(self.parts), self.spans)


def generate_phi_notes(n, seed=0):
    """This fct writes ``n`` report headers with names, dates, phone and MRN planted.

    Returns
    list of PhiNote
        ``spans`` hold the planted PHI with their category.
    """
    rng = random.Random(seed)
    notes = []
    for _ in range(n):
        b = _NoteBuilder()
        b.text("Patient's Name: ")
        b.phi(f"{rng.choice(LAST_NAMES)}, {rng.choice(FIRST_NAMES)}", "Person Name")
        b.text("\nReferred by: ")
        b.phi(f"{rng.choice(LAST_NAMES)}, {rng.choice(FIRST_NAMES)}", "Person Name")
        b.text(" ")
        b.phi("MD", "Degree/license/certificate")
        b.text("\nDate Taken: ")
        b.phi(_date(rng), "Date")
        b.text("\nDate of Report: ")
        b.phi(_date(rng), "Date")
        b.text("\n\nEXAM: Chest radiograph.\nFINDINGS: No acute process. Follow up on ")
        b.phi(_date(rng), "Date")
        b.text(".\nCall ")
        b.phi(f"({rng.randint(200, 999)}) {rng.randint(200, 999)}-{rng.randint(0, 9999):04d}", "Phone")
        b.text(" with questions.\nMRN: ")
        b.phi(str(rng.randint(10 ** 6, 10 ** 7 - 1)), "MRN")
        b.text("\n")
        notes.append(b.build())
    return notes


# ──────────────────────────────
# Random BioC collections
# ──────────────────────────────
ALPHABET = "abcdefghijklmnopqrstuvwxyz ABCDEFGHIJ0123456789.,;:-&<>\"'é"
INFON_KEYS = ["type", "section_concept", "source", "lemma", "note", "a&b"]


def _random_text(rng, low, high):
    return "".join(rng.choice(ALPHABET) for _ in range(rng.randint(low, high)))


def _random_infons(rng):
    keys = rng.sample(INFON_KEYS, rng.randint(0, 3))
    return {k: _random_text(rng, 0, 8) for k in keys}


def _random_annotations(rng, container, text, base, next_id):
    count = rng.randint(0, 3) if text else 0
    for _ in range(count):
        start = rng.randrange(len(text))
        end = rng.randint(start + 1, len(text))
        container.annotations.append(
            bioc_model.new_annotation(f"T{next_id}", base + start, text[start:end], _random_infons(rng))
        )
        next_id += 1
    return next_id


def _random_relations(rng, container, next_id):
    ids = [a.id for a in container.annotations]
    if len(ids) < 2:
        return next_id
    for _ in range(rng.randint(0, 2)):
        governor, dependant = rng.sample(ids, 2)
        container.relations.append(
            bioc_model.new_relation(f"R{next_id}", rng.choice(["conj", "neg", "amod", "dep"]), governor, dependant)
        )
        next_id += 1
    return next_id


def random_collection(rng, max_documents=3):
    """This fct builds a random collection that passes :func:`bioc_model.validate`."""
    collection = bioc_model.new_collection(
        source=_random_text(rng, 0, 6),
        date=f"{rng.randint(1990, 2030)}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}",
        key=_random_text(rng, 0, 6),
    )
    collection.infons = _random_infons(rng)
    for d in range(rng.randint(0, max_documents)):
        document = bioc_model.new_document(f"doc{d}")
        document.infons = _random_infons(rng)
        document.passages = []
        offset = 0
        ann_id = 0
        rel_id = 0
        for _ in range(rng.randint(1, 3)):
            offset += rng.randint(0, 5)
            text = _random_text(rng, 0, 40)
            passage = bioc_model.new_passage(offset, text, _random_infons(rng))
            cursor = 0
            while text and cursor < len(text) and rng.random() < 0.6:
                start = rng.randint(cursor, len(text) - 1)
                end = rng.randint(start + 1, len(text))
                sentence = bioc_model.new_sentence(offset + start, text[start:end], _random_infons(rng))
                ann_id = _random_annotations(rng, sentence, sentence.text, sentence.offset, ann_id)
                rel_id = _random_relations(rng, sentence, rel_id)
                passage.sentences.append(sentence)
                cursor = end
            ann_id = _random_annotations(rng, passage, text, offset, ann_id)
            rel_id = _random_relations(rng, passage, rel_id)
            document.passages.append(passage)
            offset += len(text)
        collection.documents.append(document)
    return collection


# ──────────────────────────────
# Random NOTE_NLP rows
# ──────────────────────────────
CELL_ALPHABET = "abcxyz ABC019,;=\"'\n-é"


def _cell(rng, low=0, high=10):
    return "".join(rng.choice(CELL_ALPHABET) for _ in range(rng.randint(low, high)))


def _modifiers(rng):
    style = rng.randrange(3)
    if style == 0:
        return ""
    if style == 1:
        keys = rng.sample(["negation", "uncertainty", "source", "phi_type"], rng.randint(1, 3))
        return "; ".join(f"{k}={rng.choice(['True', 'False', 'x y'])}" for k in keys)
    return _cell(rng)


def random_note_nlp_rows(n, rng):
    """This fct returns ``n`` NOTE_NLP rows grouped by note, with unique ids."""
    rows = []
    system = rng.choice(["RadText", "other"])
    date = f"20{rng.randint(10, 29)}-0{rng.randint(1, 9)}-1{rng.randint(0, 9)}"
    note_count = max(1, n // 5)
    for k in range(n):
        note_id = f"note{k * note_count // n}"
        note_nlp_id = f"{note_id}.a{k}" if rng.random() < 0.8 else f"id{k}"
        rows.append(
            CdmNoteNlpRow(
                note_nlp_id=note_nlp_id,
                note_id=note_id,
                section_concept_id=rng.choice(["", "RID13166", "RID28486"]),
                snippet=_cell(rng, 0, 30),
                offset=rng.randint(0, 5000),
                lexical_variant=_cell(rng, 1, 12),
                note_nlp_concept_id=rng.choice(["", "pneumothorax", "effusion"]),
                note_nlp_source_concept_id=rng.choice(["", "C1522460", "RID5352"]),
                nlp_system=system if rng.random() < 0.9 else "alt",
                nlp_date=date if rng.random() < 0.9 else "2001-01-01",
                nlp_datetime=rng.choice(["", f"{date} 10:00:00"]),
                term_exists=rng.choice(["", "True", "False"]),
                term_temporal=rng.choice(["", "past", "present"]),
                term_modifiers=_modifiers(rng),
            )
        )
    return rows


# ──────────────────────────────
# Matcher oracle inputs
# ──────────────────────────────
LEMMAS = ["no", "not", "effusion", "pneumothorax", "be", "may", "clear", "without"]
TAGS = ["NN", "DT", "RB", "VBZ", "JJ", "IN", "MD"]
LABELS = ["conj", "neg", "det", "amod", "nsubj", "obj", "dep", "case"]
OPS = [">", "<", ">>", "<<"]


def random_tree(rng, size=8):
    """This fct builds a random single-rooted tree with 1..size nodes."""
    n = rng.randint(1, size)
    nodes = []
    for index in range(1, n + 1):
        lemma = rng.choice(LEMMAS)
        nodes.append(DepNode(index, lemma, lemma, rng.choice(TAGS)))
    order = list(range(1, n + 1))
    rng.shuffle(order)
    edges = [DepEdge(0, order[0], "root")]
    for position in range(1, n):
        edges.append(DepEdge(order[rng.randrange(position)], order[position], rng.choice(LABELS)))
    rng.shuffle(edges)
    return DepGraph(nodes=nodes, edges=edges)


def _random_node(rng, name):
    kind = rng.randrange(4)
    if kind == 0:
        body = "{}"
    elif kind == 1:
        body = "{lemma:/" + "|".join(rng.sample(LEMMAS, rng.randint(1, 3))) + "/}"
    elif kind == 2:
        body = "{tag:/" + rng.choice(["NN", "JJ|RB", "VB.*", "D."]) + "/}"
    else:
        body = "{lemma:/" + rng.choice(LEMMAS) + "/,tag:/" + rng.choice(TAGS) + "/}"
    return body + (f"={name}" if name else "")


def random_pattern(rng, size=3):
    """This fct writes and compiles a random query of 1..size nodes with one ``f``."""
    n = rng.randint(1, size)
    focus = rng.randrange(n)
    parts = []
    for i in range(n):
        if i:
            op = rng.choice(OPS)
            if rng.random() < 0.3:
                op += "{dep:/" + "|".join(rng.sample(LABELS, rng.randint(1, 2))) + "/}"
            elif rng.random() < 0.1:
                op += "{}"
            parts.append(op)
        name = "f" if i == focus else (f"k{i}" if rng.random() < 0.5 else "")
        parts.append(_random_node(rng, name))
    return compile_pattern(" ".join(parts), "random")
