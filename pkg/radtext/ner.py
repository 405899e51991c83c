# radtext/ner.py
"""
This is the file that handles named entity recognition.
Concepts come from a YAML vocabulary of phrases and regexes; each sentence is
scanned left to right and the longest match starting on a token wins.
"""
import re
from dataclasses import dataclass, field

import yaml

try:
    from radtext import bioc_model
    from radtext.config import get_logger
    from radtext.errors import ConfigError
    from radtext.ssplit import tokenize_text
except ImportError:
    import bioc_model
    from config import get_logger
    from errors import ConfigError
    from ssplit import tokenize_text

logger = get_logger("ner")


@dataclass(frozen=True)
class Concept:
    concept_id: str
    concept_name: str
    phrases: tuple = ()
    regexes: tuple = ()
    source: str = ""


@dataclass
class _Matcher:
    pattern: re.Pattern
    concept: Concept
    rank: int


def phrase_regex(phrase):
    """Whitespace runs in the phrase match any whitespace run."""
    return re.compile(r"\s+".join(re.escape(w) for w in phrase.split()), re.IGNORECASE)


@dataclass
class ConceptVocabulary:
    """Concepts plus the compiled matchers, indexed by their first token."""
    concepts: list
    _by_first: dict = field(default_factory=dict, repr=False)
    _anywhere: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        seen = set()
        rank = 0
        for concept in self.concepts:
            if concept.concept_id in seen:
                raise ConfigError(f"duplicate concept id {concept.concept_id!r}")
            seen.add(concept.concept_id)
            if not concept.phrases and not concept.regexes:
                raise ConfigError(f"concept {concept.concept_id!r} has no phrase and no regex")
            for phrase in concept.phrases:
                words = tokenize_text(phrase)
                if not words:
                    raise ConfigError(f"concept {concept.concept_id!r} has an empty phrase")
                matcher = _Matcher(phrase_regex(phrase), concept, rank)
                self._by_first.setdefault(words[0].text.lower(), []).append(matcher)
                rank += 1
            for regex in concept.regexes:
                try:
                    pattern = re.compile(regex, re.IGNORECASE)
                except re.error as e:
                    raise ConfigError(f"concept {concept.concept_id!r}: bad regex {regex!r}: {e}") from None
                self._anywhere.append(_Matcher(pattern, concept, rank))
                rank += 1

    def __len__(self):
        return len(self.concepts)

    def candidates(self, token_text):
        return self._by_first.get(token_text.lower(), []) + self._anywhere


def load_concept_vocab(path):
    """This fct reads the concept vocabulary.

    Parameters
    path : str
        YAML file with a ``concepts`` list of ``id``, ``name``, ``phrases``,
        ``regexes`` and an optional ``source``.

    Returns
    ConceptVocabulary

    Raises
    ConfigError on duplicate ids, bad regexes or concepts with nothing to match.
    """
    try:
        with open(path, encoding="utf-8") as fp:
            data = yaml.safe_load(fp) or {}
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot load concept vocabulary from {path}: {e}") from None
    entries = data.get("concepts", []) if isinstance(data, dict) else data
    concepts = []
    for index, entry in enumerate(entries or []):
        if "id" not in entry:
            raise ConfigError(f"{path}: concept #{index + 1} has no id")
        concepts.append(
            Concept(
                concept_id=str(entry["id"]),
                concept_name=str(entry.get("name", entry["id"])),
                phrases=tuple(str(p) for p in entry.get("phrases") or []),
                regexes=tuple(str(r) for r in entry.get("regexes") or []),
                source=str(entry.get("source", "")),
            )
        )
    vocab = ConceptVocabulary(concepts)
    logger.info("LOADED concepts=%d path=%s", len(vocab), path)
    return vocab


def find_mentions(text, vocab, base=0):
    """This fct finds concept mentions in one sentence.

    Matches must start and end on token boundaries. At each start the
    longest match wins and ties go to the earlier vocabulary entry.

    Returns
    list of (offset, surface text, Concept)
    """
    tokens = tokenize_text(text)
    ends = {t.offset + t.length for t in tokens}
    mentions = []
    position = 0
    for token in tokens:
        if token.offset < position:
            continue
        best = None
        for matcher in vocab.candidates(token.text):
            m = matcher.pattern.match(text, token.offset)
            if m is None or m.end() == m.start() or m.end() not in ends:
                continue
            key = (-(m.end() - m.start()), matcher.rank)
            if best is None or key < best[0]:
                best = (key, m, matcher.concept)
        if best is None:
            continue
        _, m, concept = best
        mentions.append((base + m.start(), m.group(), concept))
        position = m.end()
    return mentions


def _is_concept(annotation):
    return "source_concept_id" in annotation.infons and bioc_model.PHI_INFON not in annotation.infons


def match_concepts(document, vocab):
    """This fct annotates the concept mentions of every sentence.

    Parameters
    document : BioCDocument
    vocab : ConceptVocabulary

    Returns
    BioCDocument
        Each mention is an annotation ``a<k>`` with infons
        source_concept, source_concept_id (and source when known).
    """
    result = bioc_model.copy_document(document)
    counter = 1 + sum(1 for _, a in bioc_model.iter_annotations(result) if _is_concept(a))
    for _, sentence in bioc_model.iter_sentences(result):
        if any(_is_concept(a) for a in sentence.annotations):
            continue
        for offset, surface, concept in find_mentions(sentence.text or "", vocab, sentence.offset):
            infons = {
                "source_concept": concept.concept_name,
                "source_concept_id": concept.concept_id,
            }
            if concept.source:
                infons["source"] = concept.source
            sentence.annotations.append(bioc_model.new_annotation(f"a{counter}", offset, surface, infons))
            counter += 1
    return result


