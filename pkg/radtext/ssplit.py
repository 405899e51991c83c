# radtext/ssplit.py
"""
This is the file that handles sentence split and word tokenization.
Everything is rule based so the same text always gives the same sentences.
"""
import re
from dataclasses import dataclass

try:
    from radtext import bioc_model
    from radtext.config import get_logger
    from radtext.errors import ConfigError
    from radtext.secsplit import TITLE_TYPE
except ImportError:
    import bioc_model
    from config import get_logger
    from errors import ConfigError
    from secsplit import TITLE_TYPE

logger = get_logger("ssplit")

TOKEN_RE = re.compile(r"\d+(?:\.\d+)+|[^\W_]+(?:['\-][^\W_]+)*|\S")
BLANK_LINE_RE = re.compile(r"\n[ \t]*\n")

TERMINATORS = {".", "!", "?"}
CLOSERS = {")", "]", "}", '"', "'"}

OPENERS = "([{\"'"
TRAILERS = ")]}\"',;:"


@dataclass(frozen=True)
class Token:
    text: str
    offset: int
    length: int


class AbbreviationList:
    """Lowercase abbreviations, stored without their trailing period."""

    def __init__(self, entries=()):
        items = set()
        for entry in entries:
            entry = entry.strip().lower().rstrip(".")
            if not entry:
                continue
            if any(c.isspace() for c in entry):
                raise ConfigError(f"abbreviation {entry!r} contains whitespace")
            items.add(entry)
        self.entries = frozenset(items)

    def __contains__(self, word):
        return word.lower().rstrip(".") in self.entries

    def __len__(self):
        return len(self.entries)


def load_abbreviations(path):
    try:
        with open(path, encoding="utf-8") as fp:
            lines = [line for line in fp if line.strip() and not line.lstrip().startswith("#")]
    except OSError as e:
        raise ConfigError(f"cannot load abbreviations from {path}: {e}") from None
    abbrevs = AbbreviationList(lines)
    logger.info("LOADED abbreviations=%d path=%s", len(abbrevs), path)
    return abbrevs


def tokenize_text(text, base=0):
    return [Token(m.group(), base + m.start(), len(m.group())) for m in TOKEN_RE.finditer(text)]


def tokenize(sentence):
    """This fct splits a sentence into word and punctuation tokens.

    Parameters
    sentence : BioCSentence

    Returns
    list of Token
        With document-global offsets.
    """
    return tokenize_text(sentence.text or "", sentence.offset)


def _chunk_at(text, pos):
    """The whitespace-delimited chunk around ``pos``, without brackets or trailing commas.

    Both periods of "e.g." see the same chunk, so dotted abbreviations are looked
    up whole.
    """
    start = pos
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    end = pos + 1
    while end < len(text) and not text[end].isspace():
        end += 1
    return text[start:end].lstrip(OPENERS).rstrip(TRAILERS)


def _is_boundary(text, tokens, i, abbrevs):
    token = tokens[i]
    if token.text not in TERMINATORS:
        return False
    if token.text != ".":
        return True
    if i > 0:
        prev = tokens[i - 1]
        if prev.offset + prev.length == token.offset:
            if _chunk_at(text, token.offset) in abbrevs:
                return False
            nxt = tokens[i + 1].text if i + 1 < len(tokens) else ""
            if len(prev.text) == 1 and prev.text.isupper() and nxt[:1].isupper():
                # initial, as in "J. Smith"
                return False
    return True


def split_text(text, abbrevs, base=0):
    """This fct groups the tokens of a text into sentences.

    Returns
    list of (offset, text)
        Offsets are ``base`` plus the position in ``text``.
    """
    tokens = tokenize_text(text)
    sentences = []
    start = None
    i = 0
    while i < len(tokens):
        token = tokens[i]
        if start is None:
            start = token.offset
        end = token.offset + token.length
        boundary = _is_boundary(text, tokens, i, abbrevs)
        if boundary:
            while i + 1 < len(tokens) and tokens[i + 1].text in CLOSERS \
                    and tokens[i + 1].offset == end:
                i += 1
                end = tokens[i].offset + tokens[i].length
        elif i + 1 < len(tokens) and BLANK_LINE_RE.search(text, end, tokens[i + 1].offset):
            boundary = True
        if boundary or i + 1 == len(tokens):
            sentences.append((base + start, text[start:end]))
            start = None
        i += 1
    return sentences


def split_sentences(document, abbrevs):
    """This fct adds sentences to every body passage of a document.

    Title passages from secsplit are left alone; passages that already have
    sentences are kept as they are.

    Parameters
    document : BioCDocument
    abbrevs : AbbreviationList

    Returns
    BioCDocument
    """
    result = bioc_model.copy_document(document)
    count = 0
    for passage in result.passages:
        if passage.infons.get("type") == TITLE_TYPE or passage.sentences:
            continue
        for offset, text in split_text(passage.text or "", abbrevs, passage.offset):
            passage.sentences.append(bioc_model.new_sentence(offset, text))
            count += 1
    logger.debug("SENTENCES document=%s count=%d", document.id, count)
    return result
