# radtext/bioc_model.py
"""
This is the file that handles the BioC document model.
The data classes come from the ``bioc`` package; reading and writing XML is done
here with lxml so that unknown elements are rejected, infon order is kept and the
output is byte-stable. It also has the validator every stage relies on.
"""
import copy
import datetime
from dataclasses import dataclass

from lxml import etree
from bioc import (
    BioCAnnotation,
    BioCCollection,
    BioCDocument,
    BioCLocation,
    BioCNode,
    BioCPassage,
    BioCRelation,
    BioCSentence,
)

try:
    from radtext import config
    from radtext.errors import BiocParseError, BiocSchemaError, BiocValidationError
except ImportError:
    import config
    from errors import BiocParseError, BiocSchemaError, BiocValidationError

DOCTYPE = '<!DOCTYPE collection SYSTEM "BioC.dtd">'

# infon marking an annotation whose text is the pre-mask PHI span
PHI_INFON = "phi_type"
STAGES_INFON = "radtext_stages"

__all__ = [
    "BioCAnnotation",
    "BioCCollection",
    "BioCDocument",
    "BioCLocation",
    "BioCNode",
    "BioCPassage",
    "BioCRelation",
    "BioCSentence",
    "Violation",
    "parse_bioc_xml",
    "serialize_bioc_xml",
    "validate",
]


@dataclass(frozen=True)
class Violation:
    """One broken invariant, with the path to the node that breaks it."""
    path: str
    kind: str
    message: str


# ──────────────────────────────
# Construction helpers
# ──────────────────────────────
def new_collection(source="", date=None, key=""):
    collection = BioCCollection()
    collection.source = source
    collection.date = date or config.NLP_DATE
    collection.key = key
    collection.infons = {}
    collection.documents = []
    return collection


def new_document(doc_id, text="", offset=0):
    """This fct builds a document holding one raw passage.

    Parameters
    doc_id : str
        Document id, becomes note_id in NOTE_NLP.
    text : str
        Raw note text.

    Returns
    BioCDocument
    """
    document = BioCDocument()
    document.id = doc_id
    document.infons = {}
    passage = BioCPassage()
    passage.offset = offset
    passage.text = text
    passage.infons = {}
    document.passages = [passage]
    return document


def new_passage(offset, text, infons=None):
    passage = BioCPassage()
    passage.offset = offset
    passage.text = text
    passage.infons = dict(infons or {})
    return passage


def new_sentence(offset, text, infons=None):
    sentence = BioCSentence()
    sentence.offset = offset
    sentence.text = text
    sentence.infons = dict(infons or {})
    return sentence


def new_annotation(ann_id, offset, text, infons=None):
    """Single-location annotation; length is the character count of ``text``."""
    annotation = BioCAnnotation()
    annotation.id = ann_id
    annotation.infons = dict(infons or {})
    annotation.text = text
    annotation.locations = [BioCLocation(offset, len(text))]
    return annotation


def new_relation(rel_id, label, governor, dependant):
    relation = BioCRelation()
    relation.id = rel_id
    relation.infons = {"dependency": label}
    relation.nodes = [BioCNode(dependant, "dependant"), BioCNode(governor, "governor")]
    return relation


def copy_document(document):
    return copy.deepcopy(document)


def stamp(collection, stage):
    """This fct records that a stage ran on the collection.

    It sets the ``nlp_system``/``nlp_date`` infons and appends the stage to
    ``radtext_stages``, which later stages read for order checks.
    """
    collection.infons["nlp_system"] = config.NLP_SYSTEM
    collection.infons["nlp_date"] = config.NLP_DATE
    done = stages_run(collection)
    if stage not in done:
        done.append(stage)
    collection.infons[STAGES_INFON] = ",".join(done)


def stages_run(collection):
    value = collection.infons.get(STAGES_INFON, "")
    return [s for s in value.split(",") if s]


def iter_sentences(document):
    for passage in document.passages:
        for sentence in passage.sentences:
            yield passage, sentence


def iter_annotations(document):
    """Yields ``(container, annotation)`` over every level of a document."""
    for annotation in document.annotations:
        yield document, annotation
    for passage in document.passages:
        for annotation in passage.annotations:
            yield passage, annotation
        for sentence in passage.sentences:
            for annotation in sentence.annotations:
                yield sentence, annotation


def document_text(document):
    """This fct rebuilds the document text from its passages.

    Gaps between passages are filled with spaces, so every global offset
    lands on the same character it had in the original note.

    Returns
    str
    """
    end = 0
    for passage in document.passages:
        end = max(end, passage.offset + len(passage.text or ""))
    chars = [" "] * end
    for passage in document.passages:
        text = passage.text or ""
        chars[passage.offset:passage.offset + len(text)] = text
    return "".join(chars)


def is_masked_form(original, masked):
    """True if ``masked`` is ``original`` with some characters turned into 'X'."""
    if len(original) != len(masked):
        return False
    return all(a == b or b == "X" for a, b in zip(original, masked))


def collection_to_dict(collection):
    """Plain nested dicts/lists, handy for structural comparisons."""

    def anns(container):
        return [
            {
                "id": a.id,
                "infons": list(a.infons.items()),
                "locations": [(l.offset, l.length) for l in a.locations],
                "text": a.text,
            }
            for a in container.annotations
        ]

    def rels(container):
        return [
            {
                "id": r.id,
                "infons": list(r.infons.items()),
                "nodes": [(n.refid, n.role) for n in r.nodes],
            }
            for r in container.relations
        ]

    return {
        "source": collection.source,
        "date": collection.date,
        "key": collection.key,
        "infons": list(collection.infons.items()),
        "documents": [
            {
                "id": d.id,
                "infons": list(d.infons.items()),
                "passages": [
                    {
                        "offset": p.offset,
                        "text": p.text,
                        "infons": list(p.infons.items()),
                        "sentences": [
                            {
                                "offset": s.offset,
                                "text": s.text,
                                "infons": list(s.infons.items()),
                                "annotations": anns(s),
                                "relations": rels(s),
                            }
                            for s in p.sentences
                        ],
                        "annotations": anns(p),
                        "relations": rels(p),
                    }
                    for p in d.passages
                ],
                "annotations": anns(d),
                "relations": rels(d),
            }
            for d in collection.documents
        ],
    }


# ──────────────────────────────
# XML reading
# ──────────────────────────────
def _schema_error(el, message):
    return BiocSchemaError(f"line {el.sourceline}: {message}")


def _children(el, allowed):
    for child in el:
        if not isinstance(child.tag, str):
            continue
        if child.tag not in allowed:
            raise _schema_error(child, f"unexpected element <{child.tag}> inside <{el.tag}>")
        yield child


def _text(el):
    return el.text or ""


def _int(el, value, what):
    try:
        return int((value or "").strip())
    except ValueError:
        raise _schema_error(el, f"{what} {value!r} is not numeric") from None


def _attr(el, name):
    value = el.get(name)
    if value is None:
        raise _schema_error(el, f"<{el.tag}> is missing attribute '{name}'")
    return value


def _read_infon(el, infons):
    key = _attr(el, "key")
    if key in infons:
        raise _schema_error(el, f"duplicate infon key {key!r}")
    infons[key] = _text(el)


def _read_annotation(el):
    annotation = BioCAnnotation()
    annotation.id = _attr(el, "id")
    annotation.infons = {}
    annotation.locations = []
    annotation.text = ""
    for child in _children(el, ("infon", "location", "text")):
        if child.tag == "infon":
            _read_infon(child, annotation.infons)
        elif child.tag == "location":
            offset = _int(child, _attr(child, "offset"), "offset")
            length = _int(child, _attr(child, "length"), "length")
            annotation.locations.append(BioCLocation(offset, length))
        else:
            annotation.text = _text(child)
    return annotation


def _read_relation(el):
    relation = BioCRelation()
    relation.id = _attr(el, "id")
    relation.infons = {}
    relation.nodes = []
    for child in _children(el, ("infon", "node")):
        if child.tag == "infon":
            _read_infon(child, relation.infons)
        else:
            relation.nodes.append(BioCNode(_attr(child, "refid"), _attr(child, "role")))
    return relation


def _read_sentence(el):
    sentence = new_sentence(0, "")
    for child in _children(el, ("infon", "offset", "text", "annotation", "relation")):
        if child.tag == "infon":
            _read_infon(child, sentence.infons)
        elif child.tag == "offset":
            sentence.offset = _int(child, child.text, "offset")
        elif child.tag == "text":
            sentence.text = _text(child)
        elif child.tag == "annotation":
            sentence.annotations.append(_read_annotation(child))
        else:
            sentence.relations.append(_read_relation(child))
    return sentence


def _read_passage(el):
    passage = new_passage(0, "")
    allowed = ("infon", "offset", "text", "sentence", "annotation", "relation")
    for child in _children(el, allowed):
        if child.tag == "infon":
            _read_infon(child, passage.infons)
        elif child.tag == "offset":
            passage.offset = _int(child, child.text, "offset")
        elif child.tag == "text":
            passage.text = _text(child)
        elif child.tag == "sentence":
            passage.sentences.append(_read_sentence(child))
        elif child.tag == "annotation":
            passage.annotations.append(_read_annotation(child))
        else:
            passage.relations.append(_read_relation(child))
    return passage


def _read_document(el):
    document = BioCDocument()
    document.id = ""
    document.infons = {}
    document.passages = []
    allowed = ("id", "infon", "passage", "annotation", "relation")
    for child in _children(el, allowed):
        if child.tag == "id":
            document.id = _text(child)
        elif child.tag == "infon":
            _read_infon(child, document.infons)
        elif child.tag == "passage":
            document.passages.append(_read_passage(child))
        elif child.tag == "annotation":
            document.annotations.append(_read_annotation(child))
        else:
            document.relations.append(_read_relation(child))
    return document


def parse_bioc_xml(data):
    """This fct reads a BioC XML document into a collection.

    Parameters
    data : bytes or str
        UTF-8 encoded BioC XML.

    Returns
    BioCCollection

    Raises
    BiocParseError when the XML is malformed (with line and column),
    BiocSchemaError for unknown elements or non-numeric offsets.
    """
    if isinstance(data, str):
        data = data.encode("utf-8")
    parser = etree.XMLParser(
        resolve_entities=False,
        no_network=True,
        load_dtd=False,
        remove_comments=True,
        remove_pis=True,
    )
    try:
        root = etree.fromstring(data, parser)
    except etree.XMLSyntaxError as e:
        line, column = e.position
        raise BiocParseError(e.msg, line, column) from None

    if root.tag != "collection":
        raise _schema_error(root, f"root element must be <collection>, got <{root.tag}>")

    collection = new_collection(date="")
    for child in _children(root, ("source", "date", "key", "infon", "document")):
        if child.tag == "source":
            collection.source = _text(child)
        elif child.tag == "date":
            collection.date = _text(child)
        elif child.tag == "key":
            collection.key = _text(child)
        elif child.tag == "infon":
            _read_infon(child, collection.infons)
        else:
            collection.documents.append(_read_document(child))
    return collection


# ──────────────────────────────
# XML writing
# ──────────────────────────────
def _add(parent, tag, text=None):
    el = etree.SubElement(parent, tag)
    if text is not None:
        el.text = text
    return el


def _write_infons(parent, infons):
    for key, value in infons.items():
        _add(parent, "infon", value).set("key", key)


def _write_annotations(parent, container):
    for annotation in container.annotations:
        el = _add(parent, "annotation")
        el.set("id", annotation.id)
        _write_infons(el, annotation.infons)
        for location in annotation.locations:
            loc = _add(el, "location")
            loc.set("offset", str(location.offset))
            loc.set("length", str(location.length))
        _add(el, "text", annotation.text or "")


def _write_relations(parent, container):
    for relation in container.relations:
        el = _add(parent, "relation")
        el.set("id", relation.id)
        _write_infons(el, relation.infons)
        for node in relation.nodes:
            n = _add(el, "node")
            n.set("refid", node.refid)
            n.set("role", node.role)


def serialize_bioc_xml(collection, check=True):
    """This fct writes a collection as BioC XML.

    Output is deterministic: 2-space indentation, LF line endings, infons in
    insertion order, attributes in a fixed order.

    Parameters
    collection : BioCCollection
    check : bool
        Run :func:`validate` first and refuse invalid collections.

    Returns
    bytes
    """
    if check:
        violations = validate(collection)
        if violations:
            raise BiocValidationError(violations)

    root = etree.Element("collection")
    _add(root, "source", collection.source or "")
    _add(root, "date", collection.date or "")
    _add(root, "key", collection.key or "")
    _write_infons(root, collection.infons)
    for document in collection.documents:
        d = _add(root, "document")
        _add(d, "id", document.id or "")
        _write_infons(d, document.infons)
        for passage in document.passages:
            p = _add(d, "passage")
            _write_infons(p, passage.infons)
            _add(p, "offset", str(passage.offset))
            _add(p, "text", passage.text or "")
            for sentence in passage.sentences:
                s = _add(p, "sentence")
                _write_infons(s, sentence.infons)
                _add(s, "offset", str(sentence.offset))
                _add(s, "text", sentence.text or "")
                _write_annotations(s, sentence)
                _write_relations(s, sentence)
            _write_annotations(p, passage)
            _write_relations(p, passage)
        _write_annotations(d, document)
        _write_relations(d, document)

    try:
        return etree.tostring(
            root,
            encoding="UTF-8",
            xml_declaration=True,
            pretty_print=True,
            doctype=DOCTYPE,
        )
    except ValueError as e:
        raise BiocSchemaError(f"text cannot be written as XML: {e}") from None


def read_collection(path):
    with open(path, "rb") as fp:
        return parse_bioc_xml(fp.read())


def write_collection(collection, path):
    data = serialize_bioc_xml(collection)
    with open(path, "wb") as fp:
        fp.write(data)


# ──────────────────────────────
# Validation
# ──────────────────────────────
def _is_date(value):
    try:
        datetime.date.fromisoformat(value or "")
        return True
    except ValueError:
        return False


def _check_annotations(container, text, base, path, seen_ids, out):
    # text == "" means the container text is unknown (e.g. CDM import without notes)
    known = bool(text)
    for annotation in container.annotations:
        apath = f"{path}/annotation[{annotation.id}]"
        if annotation.id in seen_ids:
            out.append(Violation(apath, "duplicate-id", f"annotation id {annotation.id!r} is used twice"))
        seen_ids.add(annotation.id)
        if not annotation.locations:
            out.append(Violation(apath, "no-location", "annotation has no location"))
            continue
        pieces = []
        for location in annotation.locations:
            if location.offset < 0 or location.length <= 0:
                out.append(Violation(apath, "out-of-bounds",
                                     f"location {location.offset}+{location.length} is not a span"))
                pieces = None
                break
            if not known:
                continue
            rel = location.offset - base
            if rel < 0 or rel + location.length > len(text):
                out.append(Violation(apath, "out-of-bounds",
                                     f"location {location.offset}+{location.length} outside "
                                     f"[{base}, {base + len(text)})"))
                pieces = None
                break
            pieces.append(text[rel:rel + location.length])
        if not known or pieces is None:
            continue
        expected = " ".join(pieces)
        if annotation.text == expected:
            continue
        if PHI_INFON in annotation.infons and is_masked_form(annotation.text or "", expected):
            continue
        out.append(Violation(apath, "offset-mismatch",
                             f"text {annotation.text!r} but document has {expected!r}"))


def _check_relations(container, path, seen_ids, out):
    ids = {a.id for a in container.annotations}
    for relation in container.relations:
        rpath = f"{path}/relation[{relation.id}]"
        if relation.id in seen_ids:
            out.append(Violation(rpath, "duplicate-id", f"relation id {relation.id!r} is used twice"))
        seen_ids.add(relation.id)
        if not relation.infons.get("dependency"):
            out.append(Violation(rpath, "relation-label", "missing dependency label"))
        roles = [n.role for n in relation.nodes]
        if roles.count("governor") != 1 or roles.count("dependant") != 1 or len(roles) != 2:
            out.append(Violation(rpath, "relation-nodes",
                                 f"need one governor and one dependant, got {roles}"))
        for node in relation.nodes:
            if node.refid not in ids:
                out.append(Violation(rpath, "dangling-refid", f"node refid {node.refid!r} not found"))


def validate(collection):
    """This fct lists every invariant the collection breaks.

    Checks dates, passage/sentence ordering and containment, annotation
    offsets against the text, id uniqueness per document and relation nodes.

    Returns
    list of Violation
        Empty iff the collection is valid.
    """
    out = []
    if not _is_date(collection.date):
        out.append(Violation("collection", "bad-date", f"date {collection.date!r} is not YYYY-MM-DD"))

    doc_ids = set()
    for document in collection.documents:
        dpath = f"collection/document[{document.id}]"
        if document.id in doc_ids:
            out.append(Violation(dpath, "duplicate-id", f"document id {document.id!r} is used twice"))
        doc_ids.add(document.id)
        ann_ids = set()
        rel_ids = set()
        previous_end = 0
        for p_index, passage in enumerate(document.passages):
            ppath = f"{dpath}/passage[{p_index}]"
            ptext = passage.text or ""
            if passage.offset < 0:
                out.append(Violation(ppath, "out-of-bounds", f"negative offset {passage.offset}"))
            if passage.offset < previous_end:
                out.append(Violation(ppath, "overlap", "passage starts before the previous one ends"))
            previous_end = max(previous_end, passage.offset + len(ptext))

            sentence_end = passage.offset
            for s_index, sentence in enumerate(passage.sentences):
                spath = f"{ppath}/sentence[{s_index}]"
                stext = sentence.text or ""
                if sentence.offset < sentence_end:
                    out.append(Violation(spath, "overlap", "sentence starts before the previous one ends"))
                sentence_end = max(sentence_end, sentence.offset + len(stext))
                if ptext:
                    rel = sentence.offset - passage.offset
                    if rel < 0 or rel + len(stext) > len(ptext):
                        out.append(Violation(spath, "out-of-bounds", "sentence outside its passage"))
                    elif ptext[rel:rel + len(stext)] != stext:
                        out.append(Violation(spath, "offset-mismatch",
                                             "sentence text differs from the passage text"))
                _check_annotations(sentence, stext, sentence.offset, spath, ann_ids, out)
                _check_relations(sentence, spath, rel_ids, out)

            _check_annotations(passage, ptext, passage.offset, ppath, ann_ids, out)
            _check_relations(passage, ppath, rel_ids, out)

        _check_annotations(document, document_text(document), 0, dpath, ann_ids, out)
        _check_relations(document, dpath, rel_ids, out)
    return out
