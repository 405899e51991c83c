# radtext/deid.py
"""
This is the file that handles rule-based de-identification.
PHI spans are found with the regex and dictionary rules from a YAML file,
annotated with their category, and masked with 'X' one character at a time
so every offset in the document stays where it was.
"""
import os
import re
from dataclasses import dataclass

import yaml

try:
    from radtext import bioc_model
    from radtext.config import get_logger
    from radtext.errors import ConfigError
except ImportError:
    import bioc_model
    from config import get_logger
    from errors import ConfigError

logger = get_logger("deid")

MASK_CHAR = "X"
PHI_GROUP = "phi"


@dataclass(frozen=True)
class PhiRule:
    """One way of spotting a PHI category.

    ``pattern`` is either a regex from the file or the compiled dictionary.
    When the regex has a group named ``phi`` only that group is the span.
    """
    name: str
    category: str
    concept_id: str
    pattern: re.Pattern
    priority: int = 0


def _dictionary_pattern(path, name):
    try:
        with open(path, encoding="utf-8") as fp:
            words = [line.strip() for line in fp if line.strip() and not line.startswith("#")]
    except OSError as e:
        raise ConfigError(f"rule {name!r}: cannot read dictionary {path}: {e}") from None
    if not words:
        return None
    words.sort(key=len, reverse=True)
    alternatives = "|".join(re.escape(w) for w in words)
    return re.compile(rf"(?<![A-Za-z])(?:{alternatives})(?![A-Za-z])", re.IGNORECASE)


def load_phi_rules(path):
    """This fct reads the PHI rule file.

    Each entry has ``name``, ``category``, optional ``concept_id``,
    ``priority`` and either ``regex`` (with optional ``flags`` such as
    ``IGNORECASE``/``MULTILINE``) or ``dictionary`` (a word list path,
    relative to the rule file).

    Parameters
    path : str

    Returns
    list of PhiRule

    Raises
    ConfigError naming the rule when a regex does not compile.
    """
    try:
        with open(path, encoding="utf-8") as fp:
            data = yaml.safe_load(fp) or {}
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot load PHI rules from {path}: {e}") from None

    entries = data.get("rules", []) if isinstance(data, dict) else data
    if not isinstance(entries, list):
        raise ConfigError(f"{path}: 'rules' must be a list")

    rules = []
    base = os.path.dirname(os.path.abspath(path))
    for index, entry in enumerate(entries):
        name = str(entry.get("name", f"rule{index}"))
        if "category" not in entry:
            raise ConfigError(f"rule {name!r}: missing category")
        flags = 0
        for flag in entry.get("flags", []):
            try:
                flags |= getattr(re, str(flag).upper())
            except AttributeError:
                raise ConfigError(f"rule {name!r}: unknown regex flag {flag!r}") from None
        if "regex" in entry:
            try:
                pattern = re.compile(str(entry["regex"]), flags)
            except re.error as e:
                raise ConfigError(f"rule {name!r}: bad regex: {e}") from None
        elif "dictionary" in entry:
            pattern = _dictionary_pattern(os.path.join(base, str(entry["dictionary"])), name)
            if pattern is None:
                logger.warning("rule %s has an empty dictionary, skipped", name)
                continue
        else:
            raise ConfigError(f"rule {name!r}: needs a regex or a dictionary")
        rules.append(
            PhiRule(
                name=name,
                category=str(entry["category"]),
                concept_id=str(entry.get("concept_id", "")),
                pattern=pattern,
                priority=int(entry.get("priority", 0)),
            )
        )
    logger.info("LOADED phi_rules=%d path=%s", len(rules), path)
    return rules


def _already_masked(span):
    visible = [c for c in span if not c.isspace()]
    return bool(visible) and all(c == MASK_CHAR for c in visible)


def find_phi_spans(text, rules):
    """This fct returns the non-overlapping PHI spans of a text.

    Higher priority wins; on equal priority the leftmost, then the longest,
    then the earlier rule wins.

    Returns
    list of (start, end, PhiRule) sorted by start
    """
    candidates = []
    for rule_index, rule in enumerate(rules):
        use_group = PHI_GROUP in rule.pattern.groupindex
        for match in rule.pattern.finditer(text):
            start, end = match.span(PHI_GROUP) if use_group else match.span()
            if start < 0 or end <= start:
                continue
            if _already_masked(text[start:end]):
                continue
            candidates.append((-rule.priority, start, -(end - start), rule_index, end, rule))

    candidates.sort(key=lambda c: c[:4])
    taken = []
    for _, start, _, _, end, rule in candidates:
        if any(start < t_end and t_start < end for t_start, t_end, _ in taken):
            continue
        taken.append((start, end, rule))
    taken.sort(key=lambda t: t[0])
    return taken


def deidentify(document, rules, redact=False):
    """This fct masks PHI in every passage of a document.

    Parameters
    document : BioCDocument
    rules : list of PhiRule
    redact : bool
        Drop the PHI annotations so the original text is not kept anywhere.

    Returns
    BioCDocument
        A new document; passage lengths are unchanged and each masked span
        has an annotation ``A<k>`` holding the original text.
    """
    result = bioc_model.copy_document(document)
    counter = sum(1 for _, a in bioc_model.iter_annotations(result) if bioc_model.PHI_INFON in a.infons)
    for passage in result.passages:
        text = passage.text or ""
        if not text:
            continue
        spans = find_phi_spans(text, rules)
        if not spans:
            continue
        chars = list(text)
        for start, end, rule in spans:
            original = text[start:end]
            for i in range(start, end):
                chars[i] = MASK_CHAR
            if redact:
                continue
            infons = {"source_concept": rule.category}
            if rule.concept_id:
                infons["source_concept_id"] = rule.concept_id
            infons[bioc_model.PHI_INFON] = rule.category
            passage.annotations.append(
                bioc_model.new_annotation(f"A{counter}", passage.offset + start, original, infons)
            )
            counter += 1
        passage.text = "".join(chars)
        for sentence in passage.sentences:
            rel = sentence.offset - passage.offset
            sentence.text = passage.text[rel:rel + len(sentence.text)]
        logger.debug("MASKED document=%s spans=%d", document.id, len(spans))
    return result
