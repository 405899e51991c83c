# radtext/secsplit.py
"""
This is the file that splits reports into sections.
A header is an uppercase run ending in ':' at the start of a line, or any
title from the vocabulary (any case) followed by ':'. Each header becomes a
title passage and the text up to the next header becomes a body passage.
"""
import re
from dataclasses import dataclass

import pandas as pd

try:
    from radtext import bioc_model
    from radtext.config import get_logger
    from radtext.errors import ConfigError
except ImportError:
    import bioc_model
    from config import get_logger
    from errors import ConfigError

logger = get_logger("secsplit")

HEADER_RE = re.compile(r"^[ \t]*(?P<title>[A-Z][A-Z ']{0,40}):", re.MULTILINE)

TITLE_TYPE = "title"


def normalize_title(title):
    return " ".join(title.split()).upper()


@dataclass(frozen=True)
class SectionTitle:
    title: str
    section_concept: str
    section_concept_id: str


class SectionTitleVocab:
    """Section titles with their concepts, looked up case-insensitively."""

    def __init__(self, entries):
        self.entries = tuple(entries)
        self._by_title = {}
        for entry in self.entries:
            key = normalize_title(entry.title)
            if not key:
                raise ConfigError("section vocabulary has an empty title")
            if key in self._by_title:
                raise ConfigError(f"duplicate section title {entry.title!r}")
            self._by_title[key] = entry
        if self.entries:
            titles = sorted(self._by_title, key=len, reverse=True)
            alternatives = "|".join(r"[ \t]+".join(map(re.escape, t.split())) for t in titles)
            self.pattern = re.compile(
                rf"^[ \t]*(?P<title>{alternatives})[ \t]*:", re.MULTILINE | re.IGNORECASE
            )
        else:
            self.pattern = None

    def __len__(self):
        return len(self.entries)

    def lookup(self, title):
        return self._by_title.get(normalize_title(title))


def load_section_vocab(path):
    """This fct reads a section vocabulary CSV.

    Parameters
    path : str
        CSV with columns title, section_concept, section_concept_id.

    Returns
    SectionTitleVocab

    Raises
    ConfigError on a duplicate title or missing columns.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ConfigError(f"cannot load section vocabulary from {path}: {e}") from None
    needed = ["title", "section_concept", "section_concept_id"]
    missing = [c for c in needed if c not in frame.columns]
    if missing:
        raise ConfigError(f"{path}: missing column(s) {', '.join(missing)}")
    entries = [
        SectionTitle(r["title"].strip(), r["section_concept"].strip(), r["section_concept_id"].strip())
        for r in frame.to_dict("records")
    ]
    vocab = SectionTitleVocab(entries)
    logger.info("LOADED section_titles=%d path=%s", len(vocab), path)
    return vocab


def find_headers(text, vocab):
    """This fct lists the headers of a text.

    Returns
    list of (start, end, title)
        ``start``/``end`` cover the header including its colon.
    """
    found = {}
    for regex in (HEADER_RE, vocab.pattern if vocab is not None else None):
        if regex is None:
            continue
        for match in regex.finditer(text):
            start = match.start("title")
            end = match.end()
            if start not in found or end > found[start][0]:
                found[start] = (end, match.group("title"))
    headers = []
    last_end = -1
    for start in sorted(found):
        end, title = found[start]
        if start < last_end:
            continue
        headers.append((start, end, title))
        last_end = end
    return headers


def _trimmed(text, start, end):
    chunk = text[start:end]
    stripped = chunk.strip()
    if not stripped:
        return None
    lead = len(chunk) - len(chunk.lstrip())
    return start + lead, stripped


def _move_children(old_passages, document, new_passages):
    """Annotations and sentences of the old passages go to the new passage that holds them."""

    def holder(offset, length):
        for passage in new_passages:
            if passage.offset <= offset and offset + length <= passage.offset + len(passage.text):
                return passage
        return None

    for old in old_passages:
        for annotation in old.annotations:
            start = min(l.offset for l in annotation.locations) if annotation.locations else 0
            end = max((l.offset + l.length for l in annotation.locations), default=start)
            target = holder(start, end - start)
            (target.annotations if target else document.annotations).append(annotation)
        for sentence in old.sentences:
            target = holder(sentence.offset, len(sentence.text))
            if target is not None:
                target.sentences.append(sentence)
            else:
                logger.warning("dropped sentence at %d crossing a section boundary", sentence.offset)
        document.relations.extend(old.relations)


def split_sections(document, vocab):
    """This fct splits a document into title and body passages.

    Parameters
    document : BioCDocument
        Passages are joined back into the note text before splitting.
    vocab : SectionTitleVocab

    Returns
    BioCDocument
        New document; passages ordered, gap-free except for whitespace.
    """
    result = bioc_model.copy_document(document)
    text = bioc_model.document_text(result)
    if not text.strip():
        return result

    passages = []
    headers = find_headers(text, vocab)
    section = {}
    cursor = 0
    for start, end, title in headers:
        body = _trimmed(text, cursor, start)
        if body:
            passages.append(bioc_model.new_passage(body[0], body[1], section))
        entry = vocab.lookup(title) if vocab is not None else None
        infons = {}
        if entry is not None:
            infons["section_concept"] = entry.section_concept
            infons["section_concept_id"] = entry.section_concept_id
        infons["type"] = TITLE_TYPE
        passages.append(bioc_model.new_passage(start, text[start:end], infons))
        section = {k: v for k, v in infons.items() if k != "type"}
        section["section_title"] = title
        cursor = end
    body = _trimmed(text, cursor, len(text))
    if body:
        passages.append(bioc_model.new_passage(body[0], body[1], section))

    old = result.passages
    result.passages = passages
    _move_children(old, result, passages)
    for passage in passages:
        passage.sentences.sort(key=lambda s: s.offset)
    logger.debug("SECTIONS document=%s passages=%d", document.id, len(passages))
    return result
