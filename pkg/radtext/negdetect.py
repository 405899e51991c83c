# radtext/negdetect.py
"""
This is the file that handles negation and uncertainty detection.
Patterns are small dependency-graph queries written as a chain of node
constraints and edge steps, e.g. ``{}=f > {lemma:/no/}``. A concept is
negated (or uncertain) when some pattern matches with its ``f`` node on one
of the concept's tokens.

Query syntax
------------
node   ``{}`` or ``{attr:/regex/,...}`` with attr in word, lemma, tag,
       optionally followed by ``=name``
edge   ``>`` governs, ``<`` is governed by, ``>>``/``<<`` transitive forms;
       a ``{dep:/regex/}`` group after the operator, glued or spaced,
       constrains the dependency label; ``>{}`` glued means any label

Each edge relates the node before it to the node after it. Regexes match
the whole value, ignoring case.
"""
import re
from dataclasses import dataclass, field
from itertools import permutations

try:
    from radtext import bioc_model
    from radtext.config import get_logger
    from radtext.depgraph import graph_from_sentence, is_token
    from radtext.errors import ConfigError, PatternSyntaxError, PipelineOrderError
except ImportError:
    import bioc_model
    from config import get_logger
    from depgraph import graph_from_sentence, is_token
    from errors import ConfigError, PatternSyntaxError, PipelineOrderError

logger = get_logger("neg")

NEGATION = "negation"
UNCERTAINTY = "uncertainty"
NODE_ATTRS = ("word", "lemma", "tag")
EDGE_OPS = (">>", "<<", ">", "<")
RESULT_INFONS = ("exists", NEGATION, UNCERTAINTY, "negbio_pattern_id", "negbio_pattern_str")


@dataclass(frozen=True)
class NodeConstraint:
    attrs: tuple = ()  # ((attr, compiled regex), ...)
    name: str = ""

    def accepts(self, node):
        for attr, regex in self.attrs:
            value = node.upos if attr == "tag" else getattr(node, attr)
            if not regex.fullmatch(value or ""):
                return False
        return True


@dataclass(frozen=True)
class EdgeStep:
    op: str
    label: re.Pattern = None


@dataclass
class NegPattern:
    pattern_id: str
    source: str
    kind: str
    nodes: list = field(default_factory=list)
    steps: list = field(default_factory=list)

    @property
    def focus(self):
        for i, node in enumerate(self.nodes):
            if node.name == "f":
                return i
        raise ConfigError(f"pattern {self.pattern_id} has no f node")


# ──────────────────────────────
# Compiler
# ──────────────────────────────
class _Reader:
    def __init__(self, text):
        self.text = text
        self.pos = 0

    def error(self, message, pos=None):
        column = (self.pos if pos is None else pos) + 1
        return PatternSyntaxError(message, column)

    def skip_space(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def at_end(self):
        return self.pos >= len(self.text)

    def peek(self, n=1):
        return self.text[self.pos:self.pos + n]

    def braces(self):
        """Reads ``{attr:/re/,...}`` at pos; returns [(attr, source, column)]."""
        if self.peek() != "{":
            raise self.error("expected '{'")
        self.pos += 1
        items = []
        while True:
            self.skip_space()
            if self.peek() == "}":
                self.pos += 1
                return items
            start = self.pos
            m = re.compile(r"[A-Za-z_]+").match(self.text, self.pos)
            if m is None:
                raise self.error("expected an attribute name")
            attr = m.group()
            self.pos = m.end()
            if self.peek(2) != ":/":
                raise self.error(f"expected ':/' after {attr!r}")
            self.pos += 2
            chars = []
            while True:
                if self.at_end():
                    raise self.error("unterminated regex", start)
                c = self.text[self.pos]
                if c == "\\" and self.peek(2) == "\\/":
                    chars.append("/")
                    self.pos += 2
                    continue
                if c == "/":
                    self.pos += 1
                    break
                chars.append(c)
                self.pos += 1
            items.append((attr, "".join(chars), start))
            self.skip_space()
            if self.peek() == ",":
                self.pos += 1
            elif self.peek() != "}":
                raise self.error("expected ',' or '}'")

    def name(self):
        if self.peek() != "=":
            return ""
        self.pos += 1
        m = re.compile(r"\w+").match(self.text, self.pos)
        if m is None:
            raise self.error("expected a name after '='")
        self.pos = m.end()
        return m.group()


def _regex(reader, source, column):
    try:
        return re.compile(source, re.IGNORECASE)
    except re.error as e:
        raise reader.error(f"bad regex {source!r}: {e}", column) from None


def compile_pattern(source, pattern_id="", kind=NEGATION):
    """This fct compiles one query.

    Parameters
    source : str
    pattern_id : str
    kind : str
        ``negation`` or ``uncertainty``.

    Returns
    NegPattern

    Raises
    PatternSyntaxError with the column of the problem; a query without an
    ``f`` node is rejected too.
    """
    if kind not in (NEGATION, UNCERTAINTY):
        raise ConfigError(f"unknown pattern kind {kind!r}")
    reader = _Reader(source)
    nodes, steps, names = [], [], set()
    expect_node = True
    reader.skip_space()
    while not reader.at_end():
        if expect_node:
            start = reader.pos
            attrs = []
            for attr, regex_src, column in reader.braces():
                if attr not in NODE_ATTRS:
                    raise reader.error(f"unknown node attribute {attr!r}", column)
                attrs.append((attr, _regex(reader, regex_src, column)))
            name = reader.name()
            if name:
                if name in names:
                    raise reader.error(f"name {name!r} used twice", start)
                names.add(name)
            nodes.append(NodeConstraint(tuple(attrs), name))
            expect_node = False
        else:
            op = next((o for o in EDGE_OPS if reader.peek(len(o)) == o), None)
            if op is None:
                raise reader.error("expected an edge operator")
            reader.pos += len(op)
            glued = reader.peek() == "{"
            reader.skip_space()
            label = None
            if reader.peek() == "{":
                save = reader.pos
                items = reader.braces()
                if reader.peek() == "=":
                    is_label = False
                elif items:
                    # dep is never a node attribute
                    is_label = all(a == "dep" for a, _, _ in items)
                else:
                    is_label = glued and reader.text[reader.pos:].lstrip().startswith("{")
                if is_label:
                    if items:
                        _, regex_src, column = items[0]
                        label = _regex(reader, regex_src, column)
                else:
                    reader.pos = save
            steps.append(EdgeStep(op, label))
            expect_node = True
        reader.skip_space()
    if not nodes:
        raise reader.error("empty pattern", 0)
    if expect_node:
        raise reader.error("pattern ends with an edge operator")
    if "f" not in names:
        raise reader.error("pattern has no '=f' node", 0)
    return NegPattern(pattern_id, source, kind, nodes, steps)


def load_patterns(path, kind):
    """This fct reads a pattern file: ``id<TAB>query`` per line, '#' comments."""
    patterns = []
    seen = set()
    try:
        with open(path, encoding="utf-8") as fp:
            for number, line in enumerate(fp, start=1):
                line = line.rstrip("\n")
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) < 2:
                    raise ConfigError(f"{path}:{number}: expected 'id<TAB>pattern'")
                pattern_id, source = parts[0].strip(), parts[1].strip()
                if pattern_id in seen:
                    raise ConfigError(f"{path}:{number}: duplicate pattern id {pattern_id!r}")
                seen.add(pattern_id)
                try:
                    patterns.append(compile_pattern(source, pattern_id, kind))
                except PatternSyntaxError as e:
                    raise PatternSyntaxError(f"{path}:{number}: {e}") from None
    except OSError as e:
        raise ConfigError(f"cannot load patterns from {path}: {e}") from None
    logger.info("LOADED %s_patterns=%d path=%s", kind, len(patterns), path)
    return patterns


# ──────────────────────────────
# Matcher
# ──────────────────────────────
class _Index:
    """Adjacency of one graph, virtual root left out."""

    def __init__(self, graph):
        self.nodes = {n.index: n for n in graph.nodes}
        self.parent = {}
        self.children = {}
        for e in graph.edges:
            if e.governor == 0:
                continue
            self.parent[e.dependent] = (e.governor, e.label)
            self.children.setdefault(e.governor, []).append((e.dependent, e.label))

    def descendants(self, index):
        """(node, label of the edge into it) for every proper descendant."""
        out = []
        stack = list(self.children.get(index, []))
        while stack:
            node, label = stack.pop()
            out.append((node, label))
            stack.extend(self.children.get(node, []))
        return out


def _related(index, node, step):
    """Graph nodes that stand in ``step`` to ``node``."""
    if step.op == ">":
        pairs = index.children.get(node, [])
    elif step.op == "<":
        pairs = [index.parent[node]] if node in index.parent else []
    elif step.op == ">>":
        pairs = index.descendants(node)
    else:
        pairs = _ancestor_pairs(index, node)
    if step.label is None:
        return [n for n, _ in pairs]
    return [n for n, label in pairs if step.label.fullmatch(label)]


def _ancestor_pairs(index, node):
    """For ``<<`` the label checked is the one on the edge into the lower node."""
    out = []
    current = node
    label = None
    while current in index.parent:
        governor, edge_label = index.parent[current]
        out.append((governor, edge_label if label is None else label))
        label = label or edge_label
        current = governor
    return out


def match_pattern(pattern, graph, anchor=None):
    """This fct lists every injective assignment of the pattern nodes.

    Parameters
    pattern : NegPattern
    graph : DepGraph
    anchor : set of int or None
        When given the ``f`` node must be one of these indices.

    Returns
    list of tuple
        Graph indices, one per pattern node, sorted.
    """
    index = _Index(graph)
    focus = pattern.focus
    results = []

    def allowed(position, node, used):
        if node in used:
            return False
        if position == focus and anchor is not None and node not in anchor:
            return False
        return pattern.nodes[position].accepts(index.nodes[node])

    def extend(assigned):
        position = len(assigned)
        if position == len(pattern.nodes):
            results.append(tuple(assigned))
            return
        step = pattern.steps[position - 1]
        for node in _related(index, assigned[-1], step):
            if allowed(position, node, assigned):
                extend(assigned + [node])

    for node in sorted(index.nodes):
        if allowed(0, node, []):
            extend([node])
    return sorted(set(results))


def brute_force_match(pattern, graph, anchor=None):
    """Same contract as :func:`match_pattern`, by trying every permutation.

    Relations and attributes are checked straight off ``graph.edges`` and the
    node fields, so this stays an independent reference for the matcher.
    """
    nodes = {n.index: n for n in graph.nodes}
    edges = {(e.governor, e.dependent): e.label for e in graph.edges if e.governor != 0}
    heads = {dep: (gov, label) for (gov, dep), label in edges.items()}

    def above(node):
        chain = []
        while node in heads:
            node = heads[node][0]
            chain.append(node)
        return chain

    def label_ok(step, label):
        return step.label is None or step.label.fullmatch(label) is not None

    def holds(a, b, step):
        if step.op == ">":
            return (a, b) in edges and label_ok(step, edges[a, b])
        if step.op == "<":
            return (b, a) in edges and label_ok(step, edges[b, a])
        if step.op == ">>":
            return a in above(b) and label_ok(step, heads[b][1])
        # << checks the label on the first edge up from a
        return b in above(a) and label_ok(step, heads[a][1])

    def fits(constraint, node):
        values = {"word": node.word, "lemma": node.lemma, "tag": node.upos}
        return all(regex.fullmatch(values[attr] or "") is not None for attr, regex in constraint.attrs)

    focus = pattern.focus
    results = []
    for combo in permutations(sorted(nodes), len(pattern.nodes)):
        if anchor is not None and combo[focus] not in anchor:
            continue
        if not all(fits(c, nodes[n]) for c, n in zip(pattern.nodes, combo)):
            continue
        if all(holds(combo[i], combo[i + 1], step) for i, step in enumerate(pattern.steps)):
            results.append(combo)
    return sorted(results)


# ──────────────────────────────
# Detection over BioC
# ──────────────────────────────
def is_concept(annotation):
    infons = annotation.infons
    return "source_concept_id" in infons and bioc_model.PHI_INFON not in infons and not is_token(annotation)


def anchor_nodes(graph, annotation):
    """Nodes overlapping the annotation, closed under ``conj`` both ways."""
    start = min(l.offset for l in annotation.locations)
    end = max(l.offset + l.length for l in annotation.locations)
    anchor = {n.index for n in graph.nodes if n.offset < end and start < n.offset + len(n.word)}
    changed = True
    while changed:
        changed = False
        for e in graph.edges:
            if e.label != "conj" or e.governor == 0:
                continue
            if e.governor in anchor and e.dependent not in anchor:
                anchor.add(e.dependent)
                changed = True
            elif e.dependent in anchor and e.governor not in anchor:
                anchor.add(e.governor)
                changed = True
    return anchor


def classify(graph, annotation, patterns):
    """This fct returns the first pattern that fires for a concept, or None.

    Negation patterns are tried before uncertainty ones, each in file order.
    """
    anchor = anchor_nodes(graph, annotation)
    if not anchor:
        return None
    ordered = [p for p in patterns if p.kind == NEGATION] + [p for p in patterns if p.kind == UNCERTAINTY]
    for pattern in ordered:
        if match_pattern(pattern, graph, anchor):
            return pattern
    return None


def detect(document, patterns):
    """This fct labels every concept annotation of a document.

    Parameters
    document : BioCDocument
        Sentences holding concepts must carry a dependency graph.
    patterns : list of NegPattern

    Returns
    BioCDocument
        Concepts get ``exists`` and, when a pattern fires, ``negation`` or
        ``uncertainty`` plus negbio_pattern_id and negbio_pattern_str.

    Raises
    PipelineOrderError when a sentence with concepts has no graph.
    """
    result = bioc_model.copy_document(document)
    counts = {NEGATION: 0, UNCERTAINTY: 0, "positive": 0}
    for _, sentence in bioc_model.iter_sentences(result):
        concepts = [a for a in sentence.annotations if is_concept(a)]
        if not concepts:
            continue
        graph = graph_from_sentence(sentence)
        if graph is None:
            raise PipelineOrderError(
                f"document {document.id}: sentence at {sentence.offset} has concepts but no "
                f"dependency graph; run the parse stages first"
            )
        for annotation in concepts:
            for key in RESULT_INFONS:
                annotation.infons.pop(key, None)
            pattern = classify(graph, annotation, patterns)
            if pattern is None:
                annotation.infons["exists"] = "True"
                counts["positive"] += 1
                continue
            annotation.infons["exists"] = "False"
            annotation.infons[pattern.kind] = "True"
            annotation.infons["negbio_pattern_id"] = pattern.pattern_id
            annotation.infons["negbio_pattern_str"] = pattern.source
            counts[pattern.kind] += 1
    logger.debug(
        "NEG document=%s negated=%d uncertain=%d positive=%d",
        document.id, counts[NEGATION], counts[UNCERTAINTY], counts["positive"],
    )
    return result
