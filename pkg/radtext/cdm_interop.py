# radtext/cdm_interop.py
"""
This is the file that converts between BioC collections and the OMOP CDM
NOTE_NLP table, and reads raw notes from CSV.
Tables go through pandas; every column is read as a string so nothing gets
reinterpreted on the way.
"""
import io
from dataclasses import dataclass, fields, asdict

import pandas as pd

try:
    from radtext import bioc_model
    from radtext.config import get_logger
    from radtext.errors import ConfigError, ConversionError, DataError, BiocValidationError
except ImportError:
    import bioc_model
    from config import get_logger
    from errors import ConfigError, ConversionError, DataError, BiocValidationError

logger = get_logger("cdm")

NOTE_NLP_COLUMNS = [
    "note_nlp_id",
    "note_id",
    "section_concept_id",
    "snippet",
    "offset",
    "lexical_variant",
    "note_nlp_concept_id",
    "note_nlp_source_concept_id",
    "nlp_system",
    "nlp_date",
    "nlp_datetime",
    "term_exists",
    "term_temporal",
    "term_modifiers",
]

NOTE_COLUMNS = ["note_id", "note_text"]

SNIPPET_WINDOW = 40

# infons that have their own NOTE_NLP column (or are token markers) and so
# never show up inside term_modifiers
MAPPED_INFONS = {
    "note_nlp_id",
    "section_concept_id",
    "snippet",
    "lemma",
    "source_concept_id",
    "nlp_system",
    "nlp_date",
    "nlp_datetime",
    "exists",
    "temporal",
    "modifiers",
    "tag",
}


@dataclass
class CdmNoteNlpRow:
    """One row of the NOTE_NLP table."""
    note_nlp_id: str
    note_id: str
    section_concept_id: str
    snippet: str
    offset: int
    lexical_variant: str
    note_nlp_concept_id: str
    note_nlp_source_concept_id: str
    nlp_system: str
    nlp_date: str
    nlp_datetime: str
    term_exists: str
    term_temporal: str
    term_modifiers: str


@dataclass
class NoteRow:
    note_id: str
    note_text: str


# ──────────────────────────────
# term_modifiers
# ──────────────────────────────
def format_modifiers(infons):
    """``key=value`` pairs joined by "; " over the infons without a column."""
    return "; ".join(f"{k}={v}" for k, v in infons.items() if k not in MAPPED_INFONS)


def parse_modifiers(text):
    """This fct turns a term_modifiers string back into infons.

    If the string is not in the exact form :func:`format_modifiers` writes,
    it is kept verbatim under the ``modifiers`` infon so nothing is lost.

    Returns
    dict
    """
    if not text:
        return {}
    infons = {}
    for pair in text.split("; "):
        key, sep, value = pair.partition("=")
        if not sep or not key or key in MAPPED_INFONS or key in infons or key != key.strip():
            return {"modifiers": text}
        infons[key] = value
    if format_modifiers(infons) != text:
        return {"modifiers": text}
    return infons


# ──────────────────────────────
# BioC -> CDM
# ──────────────────────────────
def _term_exists(infons):
    if "exists" in infons:
        return infons["exists"]
    if "negation" in infons:
        return "False" if infons["negation"] == "True" else "True"
    return ""


def _section_of(passage, current):
    if "section_concept_id" in passage.infons:
        return passage.infons["section_concept_id"]
    return current


def _snippet(text, offset, length):
    start = max(0, offset - SNIPPET_WINDOW)
    end = min(len(text), offset + length + SNIPPET_WINDOW)
    return text[start:end]


def _row(collection, document, annotation, section_id, sentence, doc_text):
    infons = annotation.infons
    if not annotation.locations:
        raise ConversionError(f"annotation {annotation.id!r} in document {document.id!r} has no location")
    location = annotation.locations[0]

    if "snippet" in infons:
        snippet = infons["snippet"]
    elif sentence is not None:
        snippet = sentence.text
    else:
        snippet = _snippet(doc_text, location.offset, location.length)

    if "modifiers" in infons:
        modifiers = infons["modifiers"]
    else:
        modifiers = format_modifiers(infons)

    return CdmNoteNlpRow(
        note_nlp_id=infons.get("note_nlp_id", f"{document.id}.{annotation.id}"),
        note_id=document.id,
        section_concept_id=infons.get("section_concept_id", section_id),
        snippet=snippet,
        offset=location.offset,
        lexical_variant=annotation.text or "",
        note_nlp_concept_id=infons.get("lemma", ""),
        note_nlp_source_concept_id=infons.get("source_concept_id", ""),
        nlp_system=infons.get("nlp_system", collection.infons.get("nlp_system", "")),
        nlp_date=infons.get("nlp_date", collection.infons.get("nlp_date", collection.date)),
        nlp_datetime=infons.get("nlp_datetime", ""),
        term_exists=_term_exists(infons),
        term_temporal=infons.get("temporal", ""),
        term_modifiers=modifiers,
    )


def bioc2cdm(collection):
    """This fct turns every concept annotation into a NOTE_NLP row.

    Dependency-token annotations (those with a ``tag`` infon) are not findings
    and are skipped.

    Parameters
    collection : BioCCollection

    Returns
    list of CdmNoteNlpRow
    """
    rows = []
    for document in collection.documents:
        doc_text = bioc_model.document_text(document)
        section_id = ""
        for passage in document.passages:
            section_id = _section_of(passage, section_id)
            for annotation in passage.annotations:
                if "tag" in annotation.infons:
                    continue
                rows.append(_row(collection, document, annotation, section_id, None, doc_text))
            for sentence in passage.sentences:
                for annotation in sentence.annotations:
                    if "tag" in annotation.infons:
                        continue
                    rows.append(_row(collection, document, annotation, section_id, sentence, doc_text))
        for annotation in document.annotations:
            if "tag" not in annotation.infons:
                rows.append(_row(collection, document, annotation, "", None, doc_text))
    logger.info("BIOC2CDM documents=%d rows=%d", len(collection.documents), len(rows))
    return rows


# ──────────────────────────────
# CDM -> BioC
# ──────────────────────────────
def _annotation_from_row(row, ann_id, defaults):
    infons = {}
    if row.note_nlp_id != f"{row.note_id}.{ann_id}":
        infons["note_nlp_id"] = row.note_nlp_id
    if row.section_concept_id:
        infons["section_concept_id"] = row.section_concept_id
    infons["snippet"] = row.snippet
    if row.note_nlp_concept_id:
        infons["lemma"] = row.note_nlp_concept_id
    if row.note_nlp_source_concept_id:
        infons["source_concept_id"] = row.note_nlp_source_concept_id
    if row.nlp_system != defaults["nlp_system"]:
        infons["nlp_system"] = row.nlp_system
    if row.nlp_date != defaults["nlp_date"]:
        infons["nlp_date"] = row.nlp_date
    if row.nlp_datetime:
        infons["nlp_datetime"] = row.nlp_datetime
    # always written, so an empty term_exists survives next to a negation modifier
    infons["exists"] = row.term_exists
    if row.term_temporal:
        infons["temporal"] = row.term_temporal
    infons.update(parse_modifiers(row.term_modifiers))
    return bioc_model.new_annotation(ann_id, int(row.offset), row.lexical_variant, infons)


def _annotation_id(row, used):
    """``<note_id>.<id>`` gives ``<id>``; a clash within the note gets ``~1``, ``~2``, ... appended.

    The original note_nlp_id is kept as an infon whenever it cannot be rebuilt
    from the note id and this annotation id.
    """
    prefix = f"{row.note_id}."
    if row.note_nlp_id.startswith(prefix) and len(row.note_nlp_id) > len(prefix):
        base = row.note_nlp_id[len(prefix):]
    else:
        base = row.note_nlp_id
    ann_id = base
    n = 0
    while ann_id in used:
        n += 1
        ann_id = f"{base}~{n}"
    return ann_id


def cdm2bioc(rows, notes=None):
    """This fct rebuilds a BioC collection from NOTE_NLP rows.

    Parameters
    rows : list of CdmNoteNlpRow
    notes : list of NoteRow or None
        When given, each document gets the note text and offsets are checked.

    Returns
    BioCCollection

    Raises
    DataError for duplicate note_nlp_id or a note_id without a note,
    BiocValidationError when an offset does not fit the note text.
    """
    seen = set()
    for row in rows:
        if row.note_nlp_id in seen:
            raise DataError(f"duplicate note_nlp_id {row.note_nlp_id!r}")
        seen.add(row.note_nlp_id)

    texts = {}
    if notes is not None:
        for note in notes:
            if note.note_id in texts:
                raise DataError(f"duplicate note_id {note.note_id!r} in notes")
            texts[note.note_id] = note.note_text
        missing = sorted({r.note_id for r in rows} - set(texts))
        if missing:
            raise DataError(f"rows reference notes that were not given: {', '.join(missing)}")

    defaults = {
        "nlp_system": rows[0].nlp_system if rows else "",
        "nlp_date": rows[0].nlp_date if rows else "",
    }
    collection = bioc_model.new_collection(date=defaults["nlp_date"] or None)
    if rows:
        collection.infons["nlp_system"] = defaults["nlp_system"]
        collection.infons["nlp_date"] = defaults["nlp_date"]

    documents = {}
    order = list(texts) if notes is not None else []
    for row in rows:
        if row.note_id not in order:
            order.append(row.note_id)
    for note_id in order:
        documents[note_id] = bioc_model.new_document(note_id, texts.get(note_id, ""))

    used = {note_id: set() for note_id in order}
    for row in rows:
        document = documents[row.note_id]
        ann_id = _annotation_id(row, used[row.note_id])
        used[row.note_id].add(ann_id)
        document.passages[0].annotations.append(_annotation_from_row(row, ann_id, defaults))

    collection.documents = [documents[n] for n in order]

    if notes is not None:
        violations = bioc_model.validate(collection)
        if violations:
            raise BiocValidationError(violations)
    logger.info("CDM2BIOC rows=%d documents=%d", len(rows), len(collection.documents))
    return collection


# ──────────────────────────────
# CSV tables
# ──────────────────────────────
def _read_frame(data, required, what):
    if isinstance(data, str):
        data = data.encode("utf-8")
    if not data.strip():
        raise ConfigError(f"{what}: empty CSV, expected columns {', '.join(required)}")
    try:
        frame = pd.read_csv(
            io.BytesIO(data),
            dtype=str,
            keep_default_na=False,
            na_filter=False,
            encoding="utf-8",
        )
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataError(f"{what}: unreadable CSV: {e}") from None
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise ConfigError(f"{what}: missing column(s) {', '.join(missing)}")
    return frame


def _write_frame(frame):
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue().encode("utf-8")


def rows_to_frame(rows):
    """NOTE_NLP rows as a DataFrame with the columns in table order."""
    return pd.DataFrame([asdict(r) for r in rows], columns=NOTE_NLP_COLUMNS)


def frame_to_rows(frame):
    rows = []
    for index, record in enumerate(frame.to_dict("records")):
        try:
            record["offset"] = int(record["offset"])
        except ValueError:
            raise DataError(f"row {index + 1}: offset {record['offset']!r} is not an integer") from None
        if record["offset"] < 0:
            raise DataError(f"row {index + 1}: negative offset")
        rows.append(CdmNoteNlpRow(**{f.name: record[f.name] for f in fields(CdmNoteNlpRow)}))
    return rows


def write_note_nlp_csv(rows):
    return _write_frame(rows_to_frame(rows))


def read_note_nlp_csv(data):
    return frame_to_rows(_read_frame(data, NOTE_NLP_COLUMNS, "NOTE_NLP"))


def read_notes_csv(data, id_column="note_id", text_column="note_text"):
    frame = _read_frame(data, [id_column, text_column], "notes")
    return [NoteRow(note_id=r[id_column], note_text=r[text_column]) for r in frame.to_dict("records")]


def csv2bioc(data, id_column="note_id", text_column="note_text"):
    """This fct makes one BioC document per CSV data row.

    Parameters
    data : bytes
        RFC 4180 CSV with a header row.
    id_column, text_column : str
        Names of the id and text columns.

    Returns
    BioCCollection
        One document per row, each with one passage at offset 0.
    """
    notes = read_notes_csv(data, id_column, text_column)
    collection = bioc_model.new_collection()
    seen = set()
    for index, note in enumerate(notes):
        if note.note_id in seen:
            raise DataError(f"row {index + 1}: duplicate id {note.note_id!r}")
        seen.add(note.note_id)
        collection.documents.append(bioc_model.new_document(note.note_id, note.note_text))
    logger.info("CSV2BIOC documents=%d", len(collection.documents))
    return collection
