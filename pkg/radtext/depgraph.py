# radtext/depgraph.py
"""
This is the file that handles universal dependency graphs.
Graphs come either from CoNLL-U files (read with ``conllu``) or from bracketed
constituency trees (read with ``nltk``) converted by head rules. They are
stored in BioC sentences as token annotations ``T<k>`` and relations ``R<k>``.
"""
import re
from dataclasses import dataclass, field

import conllu
from conllu.exceptions import ParseException
from nltk import Tree

try:
    from radtext import bioc_model
    from radtext.config import get_logger
    from radtext.errors import AlignmentError, ConllError, GraphError, TreeParseError
except ImportError:
    import bioc_model
    from config import get_logger
    from errors import AlignmentError, ConllError, GraphError, TreeParseError

logger = get_logger("depgraph")

PARSE_TREE_INFON = "parse tree"
TOKEN_INFON = "tag"

LEMMA_EXCEPTIONS = {
    "is": "be",
    "are": "be",
    "was": "be",
    "were": "be",
    "been": "be",
    "am": "be",
    "has": "have",
    "had": "have",
    "seen": "see",
    "ruled": "rule",
    "n't": "not",
}

PTB_ESCAPES = {
    "-LRB-": "(",
    "-RRB-": ")",
    "-LSB-": "[",
    "-RSB-": "]",
    "-LCB-": "{",
    "-RCB-": "}",
    "``": '"',
    "''": '"',
}

PUNCT_TAGS = {".", ",", ":", "``", "''", "-LRB-", "-RRB-", "HYPH", "NFP", "PUNCT"}
NOMINAL = {"NP", "NX", "NN", "NNS", "NNP", "NNPS", "PRP"}
ADJECTIVAL = {"ADJP", "JJ", "JJR", "JJS"}
NEG_ADVERBS = {"no", "not", "n't", "never"}


def lemmatize(word):
    lowered = word.lower()
    return LEMMA_EXCEPTIONS.get(lowered, lowered)


@dataclass(frozen=True)
class DepNode:
    index: int
    word: str
    lemma: str
    upos: str
    offset: int = -1


@dataclass(frozen=True)
class DepEdge:
    governor: int
    dependent: int
    label: str


@dataclass
class DepGraph:
    """Nodes and typed governor -> dependent edges; governor 0 is the virtual root."""
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    text: str = ""

    def node(self, index):
        for n in self.nodes:
            if n.index == index:
                return n
        raise KeyError(index)

    def governor_of(self):
        """Map dependent index -> (governor index, label)."""
        return {e.dependent: (e.governor, e.label) for e in self.edges}

    def children_of(self):
        children = {}
        for e in self.edges:
            children.setdefault(e.governor, []).append((e.dependent, e.label))
        return children

    def validate(self):
        """This fct checks that the graph is one rooted tree.

        Raises
        GraphError naming the first broken invariant.
        """
        indices = [n.index for n in self.nodes]
        if len(set(indices)) != len(indices):
            raise GraphError("duplicate node index")
        known = set(indices)
        incoming = {}
        roots = 0
        for e in self.edges:
            if not e.label:
                raise GraphError(f"edge {e.governor}->{e.dependent} has no label")
            if e.dependent == e.governor:
                raise GraphError(f"node {e.dependent} governs itself")
            if e.dependent not in known or (e.governor != 0 and e.governor not in known):
                raise GraphError(f"edge {e.governor}->{e.dependent} points outside the graph")
            if e.dependent in incoming:
                raise GraphError(f"node {e.dependent} has more than one governor")
            incoming[e.dependent] = e.governor
            if e.governor == 0:
                roots += 1
        if not self.nodes:
            return
        if roots != 1:
            raise GraphError(f"expected exactly one root, found {roots}")
        missing = known - set(incoming)
        if missing:
            raise GraphError(f"node(s) {sorted(missing)} have no governor")
        for start in indices:
            seen = set()
            current = start
            while current != 0:
                if current in seen:
                    raise GraphError(f"cycle through node {start}")
                seen.add(current)
                current = incoming[current]


# ──────────────────────────────
# CoNLL-U
# ──────────────────────────────
def _blocks(text):
    """Yields (first line number, lines) for each blank-line separated block."""
    block = []
    start = 1
    for number, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            if not block:
                start = number
            block.append(line)
        elif block:
            yield start, block
            block = []
    if block:
        yield start, block


def _check_block(start, lines):
    for offset, line in enumerate(lines):
        if line.startswith("#"):
            continue
        number = start + offset
        columns = line.split("\t")
        if len(columns) != 10:
            raise ConllError(f"expected 10 tab-separated columns, got {len(columns)}", number)
        if not columns[0].isdigit():
            # multiword token ranges and empty nodes
            continue
        if not columns[6].isdigit():
            raise ConllError(f"HEAD {columns[6]!r} is not an integer", number)


def parse_conllu(text):
    """This fct reads CoNLL-U text into dependency graphs.

    Only ID, FORM, LEMMA, UPOS, HEAD and DEPREL are used; multiword tokens and
    empty nodes are skipped.

    Parameters
    text : str

    Returns
    list of DepGraph

    Raises
    ConllError with the line number for malformed lines,
    GraphError when a block is not a single rooted tree.
    """
    graphs = []
    for start, lines in _blocks(text):
        _check_block(start, lines)
        try:
            sentences = conllu.parse("\n".join(lines) + "\n\n")
        except ParseException as e:
            raise ConllError(str(e), start) from None
        for tokenlist in sentences:
            graph = DepGraph(text=tokenlist.metadata.get("text", "") if tokenlist.metadata else "")
            for token in tokenlist:
                if not isinstance(token["id"], int):
                    continue
                lemma = token.get("lemma")
                upos = token.get("upos")
                if upos in (None, "_"):
                    upos = token.get("xpos") or "_"
                graph.nodes.append(
                    DepNode(
                        index=token["id"],
                        word=token["form"],
                        lemma=lemma if lemma not in (None, "_") else lemmatize(token["form"]),
                        upos=upos,
                    )
                )
                graph.edges.append(DepEdge(token["head"], token["id"], token["deprel"] or "dep"))
            try:
                graph.validate()
            except GraphError as e:
                raise GraphError(f"block at line {start}: {e}") from None
            graphs.append(graph)
    return graphs


def to_conllu(graphs):
    """Writes graphs back out as CoNLL-U text."""
    out = []
    for graph in graphs:
        governors = graph.governor_of()
        tokens = []
        for node in sorted(graph.nodes, key=lambda n: n.index):
            head, label = governors.get(node.index, (0, "root"))
            tokens.append({
                "id": node.index,
                "form": node.word,
                "lemma": node.lemma,
                "upos": node.upos,
                "xpos": None,
                "feats": None,
                "head": head,
                "deprel": label,
                "deps": None,
                "misc": None,
            })
        metadata = {"text": graph.text} if graph.text else None
        out.append(conllu.TokenList(tokens, metadata=metadata).serialize())
    return "".join(out)


# ──────────────────────────────
# Bracketed trees
# ──────────────────────────────
def parse_ptb(text):
    """This fct reads a Penn Treebank bracketed tree.

    Empty constituents such as ``(NP)`` are kept; they are skipped later.

    Raises
    TreeParseError with the character position when brackets do not balance.
    """
    try:
        return Tree.fromstring(text)
    except ValueError as e:
        found = re.search(r"at index (\d+)", str(e))
        position = int(found.group(1)) if found else None
        message = str(e).splitlines()[0]
        raise TreeParseError(f"position {position}: {message}", position) from None


def base_label(label):
    if label.startswith("-") or not label:
        return label
    return re.split(r"[-=]", label)[0]


class HeadRuleTable:
    """Head-child preferences per constituent label.

    Each rule is ``(direction, [label regexes])``: the regexes are tried in
    order and children are scanned left-to-right or right-to-left.
    Unknown labels take the leftmost non-punctuation child.
    """

    def __init__(self, rules):
        self.rules = {
            label: (direction, [re.compile(p) for p in priorities])
            for label, (direction, priorities) in rules.items()
        }

    def head_child(self, label, child_labels):
        n = len(child_labels)
        direction, priorities = self.rules.get(base_label(label), ("left", []))
        order = list(range(n)) if direction == "left" else list(range(n - 1, -1, -1))
        for priority in priorities:
            for i in order:
                if priority.fullmatch(child_labels[i]):
                    return i
        for i in range(n):
            if child_labels[i] not in PUNCT_TAGS:
                return i
        return 0


DEFAULT_HEAD_RULES = HeadRuleTable({
    "S1": ("left", []),
    "ROOT": ("left", []),
    "S": ("left", ["VP", "S", "SBAR", "ADJP", "UCP", "NP", "FRAG"]),
    "SINV": ("left", ["VP", "VB.*", "MD", "S", "NP"]),
    "SQ": ("left", ["VP", "VB.*", "MD", "SQ"]),
    "SBAR": ("left", ["S", "SQ", "SINV", "SBAR", "FRAG"]),
    "VP": ("left", ["VB.*", "VP", "MD", "TO", "ADJP", "JJ.*", "NP", "NN.*"]),
    "NP": ("right", ["NN.*", "NX", "NP", "PRP", "CD", "EX", "JJ.*", "ADJP", "QP", "DT"]),
    "NX": ("right", ["NN.*", "NX", "NP"]),
    "PP": ("left", ["NP", "S", "SBAR", "ADJP", "VP", "NN.*"]),
    "ADVP": ("right", ["RB.*", "ADVP", "JJ.*"]),
    "ADJP": ("left", ["JJ.*", "ADJP", "VBN", "VBG", "RB.*", "NN.*"]),
    "QP": ("left", ["CD", "QP"]),
})


def _compatible(a, b):
    if a == b:
        return True
    if a in NOMINAL and b in NOMINAL:
        return True
    if a in ADJECTIVAL and b in ADJECTIVAL:
        return True
    return a.startswith(("VB", "VP")) and b.startswith(("VB", "VP"))


def _dependency_label(parent, dep_label, dep_word, dep_tag, before_head, head_tag):
    """Closed label table; anything not listed is ``dep``."""
    if dep_tag in PUNCT_TAGS or dep_label in PUNCT_TAGS:
        return "punct"
    if dep_tag == "CC":
        return "cc"
    if dep_label == "PP":
        return "nmod"
    if dep_tag in ("IN", "TO") and parent == "PP":
        return "case"
    if dep_tag == "IN" and parent == "SBAR":
        return "mark"
    if dep_tag == "EX":
        return "expl"
    if dep_tag.startswith("RB") and dep_word.lower() in NEG_ADVERBS:
        return "neg"
    if dep_tag in ("DT", "PDT", "WDT"):
        return "det"
    if dep_tag == "MD":
        return "aux"
    if dep_tag in ("PRP$", "WP$", "POS"):
        return "nmod:poss"
    if dep_tag == "CD":
        return "nummod"
    if dep_tag == "RP":
        return "compound:prt"
    if parent in ("NP", "NX"):
        if dep_tag.startswith(("JJ", "VBN", "VBG")) or dep_label == "ADJP":
            return "amod"
        if dep_tag.startswith("NN") and before_head:
            return "compound"
    if dep_tag.startswith("RB") or dep_label == "ADVP":
        return "advmod"
    if parent in ("S", "SINV", "SQ") and dep_label in NOMINAL and before_head:
        return "nsubj"
    if parent == "VP":
        if dep_label in NOMINAL and not before_head:
            return "obj"
        if dep_tag.startswith("VB") or dep_label == "VP":
            return "aux" if before_head else "xcomp"
        if dep_label in ADJECTIVAL:
            return "xcomp"
    if dep_label in ADJECTIVAL:
        return "amod"
    if dep_label == "SBAR":
        return "advcl"
    if dep_label == "S":
        return "ccomp"
    return "dep"


def _is_preterminal(tree):
    return isinstance(tree, Tree) and len(tree) == 1 and isinstance(tree[0], str)


def _single_word(tree, leaves, head):
    """(word, tag) when a constituent is a single leaf, else None."""
    if head is None:
        return None
    if _is_preterminal(tree):
        return leaves[head - 1]
    words = [w for w in tree.leaves()]
    if len(words) == 1:
        return leaves[head - 1]
    return None


def tree2dep(tree, rules=None):
    """This fct converts a constituency tree into a dependency graph.

    Head percolation follows ``rules``. Before that, coordination inside a
    constituent links later conjuncts to the first one with ``conj`` (the
    conjunction attaches to its right conjunct as ``cc``), and a lone
    "no" right before a noun phrase attaches to that phrase's head.

    Parameters
    tree : nltk.Tree
    rules : HeadRuleTable or None

    Returns
    DepGraph
        One node per leaf, in leaf order.
    """
    rules = rules or DEFAULT_HEAD_RULES
    leaves = []
    edges = []

    def visit(node):
        if _is_preterminal(node):
            leaves.append((node[0], node.label()))
            return len(leaves)
        kids = []
        for child in node:
            if isinstance(child, str):
                leaves.append((child, "X"))
                kids.append((Tree("X", [child]), len(leaves)))
                continue
            head = visit(child)
            if head is not None:
                kids.append((child, head))
        if not kids:
            return None

        parent = base_label(node.label())
        labels = [base_label(child.label()) for child, _ in kids]
        attached = {}

        # coordination
        for k, label in enumerate(labels):
            if label not in ("CC", "CONJP") or k == 0 or k == len(kids) - 1 or k in attached:
                continue
            left = k - 1
            while left >= 0 and labels[left] == ",":
                left -= 1
            right = k + 1
            if left < 0 or left in attached or right in attached:
                continue
            if not _compatible(labels[left], labels[right]):
                continue
            conjuncts = [left]
            m = left - 1
            while m >= 1 and labels[m] == "," and _compatible(labels[m - 1], labels[left]) \
                    and (m - 1) not in attached:
                conjuncts.insert(0, m - 1)
                m -= 2
            first_head = kids[conjuncts[0]][1]
            for c in conjuncts[1:] + [right]:
                attached[c] = (first_head, "conj")
            attached[k] = (kids[right][1], "cc")
            for p in range(conjuncts[0], right):
                if labels[p] == "," and p not in attached:
                    attached[p] = (first_head, "punct")

        # "no" right before a noun phrase
        for i in range(len(kids) - 1):
            if i in attached:
                continue
            single = _single_word(kids[i][0], leaves, kids[i][1])
            if single is None or single[0].lower() != "no":
                continue
            if labels[i + 1] not in NOMINAL:
                continue
            label = "det" if single[1] == "DT" else "neg"
            attached[i] = (kids[i + 1][1], label)

        remaining = [i for i in range(len(kids)) if i not in attached]
        position = rules.head_child(node.label(), [labels[i] for i in remaining])
        head_kid = remaining[position]
        head = kids[head_kid][1]
        head_tag = leaves[head - 1][1]
        for i in remaining:
            if i == head_kid:
                continue
            word, tag = leaves[kids[i][1] - 1]
            attached[i] = (head, _dependency_label(parent, labels[i], word, tag, i < head_kid, head_tag))

        for i in sorted(attached):
            governor, label = attached[i]
            edges.append(DepEdge(governor, kids[i][1], label))
        return head

    root = visit(tree) if isinstance(tree, Tree) else None
    nodes = []
    for index, (word, tag) in enumerate(leaves, start=1):
        word = PTB_ESCAPES.get(word, word)
        nodes.append(DepNode(index=index, word=word, lemma=lemmatize(word), upos=tag))
    if root is not None:
        edges.append(DepEdge(0, root, "root"))
    edges.sort(key=lambda e: e.dependent)
    graph = DepGraph(nodes=nodes, edges=edges, text=" ".join(n.word for n in nodes))
    graph.validate()
    return graph


# ──────────────────────────────
# BioC attachment
# ──────────────────────────────
def align(sentence, graph):
    """This fct finds each graph token in the sentence text, left to right.

    Returns
    list of DepNode
        Same nodes with document-global offsets.

    Raises
    AlignmentError when a token is missing from the remaining text.
    """
    text = sentence.text or ""
    cursor = 0
    aligned = []
    for node in sorted(graph.nodes, key=lambda n: n.index):
        position = text.find(node.word, cursor)
        if position < 0:
            raise AlignmentError(
                f"token {node.word!r} (#{node.index}) not found in sentence at {sentence.offset} "
                f"after position {cursor}"
            )
        aligned.append(DepNode(node.index, node.word, node.lemma, node.upos, sentence.offset + position))
        cursor = position + len(node.word)
    return aligned


def attach_graph(sentence, graph, token_start=0, relation_start=0):
    """This fct stores a graph in a sentence as annotations and relations.

    Parameters
    sentence : BioCSentence
    graph : DepGraph
    token_start, relation_start : int
        First number for the ``T<k>``/``R<k>`` ids, so ids stay unique in a document.

    Returns
    BioCSentence
        A copy with one annotation per node (infons lemma, tag) and one
        relation per non-root edge (infon dependency).
    """
    result = bioc_model.copy_document(sentence)
    if not graph.nodes:
        return result
    ids = {}
    for k, node in enumerate(align(sentence, graph)):
        ann_id = f"T{token_start + k}"
        ids[node.index] = ann_id
        result.annotations.append(
            bioc_model.new_annotation(ann_id, node.offset, node.word, {"lemma": node.lemma, TOKEN_INFON: node.upos})
        )
    k = relation_start
    for edge in sorted(graph.edges, key=lambda e: e.dependent):
        if edge.governor == 0:
            continue
        result.relations.append(
            bioc_model.new_relation(f"R{k}", edge.label, ids[edge.governor], ids[edge.dependent])
        )
        k += 1
    return result


def is_token(annotation):
    return TOKEN_INFON in annotation.infons


def graph_from_sentence(sentence):
    """This fct rebuilds the graph stored by :func:`attach_graph`.

    Returns
    DepGraph or None
        None when the sentence has no token annotations.
    """
    tokens = sorted((a for a in sentence.annotations if is_token(a)), key=lambda a: a.locations[0].offset)
    if not tokens:
        return None
    index_of = {a.id: i for i, a in enumerate(tokens, start=1)}
    nodes = [
        DepNode(i, a.text, a.infons.get("lemma", lemmatize(a.text)), a.infons[TOKEN_INFON], a.locations[0].offset)
        for i, a in enumerate(tokens, start=1)
    ]
    edges = []
    governed = set()
    for relation in sentence.relations:
        roles = {n.role: n.refid for n in relation.nodes}
        governor = index_of.get(roles.get("governor"))
        dependant = index_of.get(roles.get("dependant"))
        if governor is None or dependant is None:
            continue
        edges.append(DepEdge(governor, dependant, relation.infons.get("dependency", "dep")))
        governed.add(dependant)
    for node in nodes:
        if node.index not in governed:
            edges.append(DepEdge(0, node.index, "root"))
    edges.sort(key=lambda e: e.dependent)
    return DepGraph(nodes=nodes, edges=edges, text=sentence.text or "")


def _id_counters(document):
    tokens = 0
    relations = 0
    for _, sentence in bioc_model.iter_sentences(document):
        tokens += sum(1 for a in sentence.annotations if is_token(a))
        relations += sum(1 for r in sentence.relations if "dependency" in r.infons)
    return tokens, relations


def _attach_in_place(passage, position, sentence, graph, counters):
    attached = attach_graph(sentence, graph, counters[0], counters[1])
    counters[0] += len(graph.nodes)
    counters[1] += sum(1 for e in graph.edges if e.governor != 0)
    passage.sentences[position] = attached


def convert_trees(document, rules=None):
    """This fct turns every ``parse tree`` infon into an attached graph.

    Sentences that already hold tokens are skipped, so the stage can run twice.

    Returns
    BioCDocument
    """
    result = bioc_model.copy_document(document)
    counters = list(_id_counters(result))
    converted = 0
    for passage in result.passages:
        for position, sentence in enumerate(passage.sentences):
            source = sentence.infons.get(PARSE_TREE_INFON)
            if not source or any(is_token(a) for a in sentence.annotations):
                continue
            graph = tree2dep(parse_ptb(source), rules)
            _attach_in_place(passage, position, sentence, graph, counters)
            converted += 1
    logger.debug("CONVERTED document=%s sentences=%d", document.id, converted)
    return result


def attach_graphs(document, graphs):
    """This fct attaches CoNLL-U graphs to sentences, one block per sentence in order.

    Raises
    GraphError when the number of blocks and sentences differ.
    """
    result = bioc_model.copy_document(document)
    slots = [(p, i) for p in result.passages for i in range(len(p.sentences))]
    if len(slots) != len(graphs):
        raise GraphError(
            f"document {document.id}: {len(graphs)} CoNLL-U block(s) for {len(slots)} sentence(s)"
        )
    counters = list(_id_counters(result))
    for (passage, position), graph in zip(slots, graphs):
        _attach_in_place(passage, position, passage.sentences[position], graph, counters)
    return result


def sentence_count(document):
    return sum(len(p.sentences) for p in document.passages)
