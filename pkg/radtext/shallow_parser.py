# radtext/shallow_parser.py
"""
This is the file that gives a bracketed parse to sentences that have none.
Tokens are tagged from a small lexicon with suffix rules as backoff, then
chunked by a cascade of nltk regexp rules. The output is a flat but usable
``(S1 (S ...))`` tree for tree2dep.
"""
import sys

from nltk import RegexpParser, Tree
from nltk.tag import RegexpTagger, UnigramTagger

try:
    from radtext import bioc_model
    from radtext.config import get_logger
    from radtext.depgraph import PARSE_TREE_INFON, PTB_ESCAPES
    from radtext.errors import ConfigError
    from radtext.ssplit import tokenize_text
except ImportError:
    import bioc_model
    from config import get_logger
    from depgraph import PARSE_TREE_INFON, PTB_ESCAPES
    from errors import ConfigError
    from ssplit import tokenize_text

logger = get_logger("parse")

SUFFIX_RULES = [
    (r"^[.!?]$", "."),
    (r"^,$", ","),
    (r"^[:;]$", ":"),
    (r"^[(\[{]$", "-LRB-"),
    (r"^[)\]}]$", "-RRB-"),
    (r"^[\"'`]+$", "''"),
    (r"^-?\d+(?:[.,]\d+)*$", "CD"),
    (r"^x+$", "NN"),
    (r".*ly$", "RB"),
    (r".*ing$", "VBG"),
    (r".*ed$", "VBN"),
    (r".*(?:ous|al|ic|ive|ar|ary|ful|less|ible|able)$", "JJ"),
    (r".*(?:is|us|ss)$", "NN"),
    (r".*s$", "NNS"),
    (r".*", "NN"),
]

# coordination runs before PP so "without A, B or C" keeps the whole list
CHUNK_GRAMMAR = r"""
NP: {<DT|PDT|PRP\$|CD>*<JJ.*|VBN|VBG|NN.*|CD>*<NN.*>}
    {<EX|PRP>}
NP: {<NP>(<,><NP>)*<,>?<CC><NP>}
PP: {<IN|TO><NP>}
NP: {<NP><PP>+}
ADJP: {<RB.*>*<JJ.*|VBN>+<PP>?}
VP: {<MD>?<RB.*>*<VB.*>+<RP>?<RB.*>*<NP|PP|ADJP>*}
"""

ESCAPE = {v: k for k, v in PTB_ESCAPES.items() if k not in ("``", "''")}


def load_lexicon(path):
    """This fct reads the word -> tag lexicon (tab separated, '#' comments)."""
    lexicon = {}
    try:
        with open(path, encoding="utf-8") as fp:
            for number, line in enumerate(fp, start=1):
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise ConfigError(f"{path}:{number}: expected 'word<TAB>tag'")
                lexicon[parts[0].strip().lower()] = parts[1].strip()
    except OSError as e:
        raise ConfigError(f"cannot load lexicon from {path}: {e}") from None
    logger.info("LOADED lexicon=%d path=%s", len(lexicon), path)
    return lexicon


class ShallowParser:
    """Lexicon tagger plus chunk cascade."""

    def __init__(self, lexicon):
        self.tagger = UnigramTagger(model=dict(lexicon), backoff=RegexpTagger(SUFFIX_RULES))
        self.chunker = RegexpParser(CHUNK_GRAMMAR)

    def tag(self, words):
        tags = self.tagger.tag([w.lower() for w in words])
        return [(word, tag) for word, (_, tag) in zip(words, tags)]

    def parse_words(self, words):
        """This fct returns the ``S1`` tree for a list of words."""
        if not words:
            return None
        chunked = self.chunker.parse(self.tag(words))
        return Tree("S1", [_to_tree(chunked)])

    def parse(self, text):
        return self.parse_words([t.text for t in tokenize_text(text)])


def _to_tree(node):
    if isinstance(node, tuple):
        word, tag = node
        return Tree(tag, [ESCAPE.get(word, word)])
    return Tree(node.label(), [_to_tree(child) for child in node])


def tree_string(tree):
    return tree.pformat(margin=sys.maxsize)


def parse_document(document, parser):
    """This fct adds a ``parse tree`` infon to sentences that lack one.

    Parameters
    document : BioCDocument
    parser : ShallowParser

    Returns
    BioCDocument
    """
    result = bioc_model.copy_document(document)
    count = 0
    for _, sentence in bioc_model.iter_sentences(result):
        if sentence.infons.get(PARSE_TREE_INFON):
            continue
        tree = parser.parse(sentence.text or "")
        if tree is None:
            continue
        sentence.infons[PARSE_TREE_INFON] = tree_string(tree)
        count += 1
    logger.debug("PARSED document=%s sentences=%d", document.id, count)
    return result
