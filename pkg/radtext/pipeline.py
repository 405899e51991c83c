# radtext/pipeline.py
"""
This is the file that chains the stages together.
Each stage has a resource loader and a per-document function. The stage
registry is shared by the command line and by :class:`Pipeline`, the library
entry point.
"""
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from tqdm import tqdm

try:
    from radtext import bioc_model, cdm_interop, collect, config, deid, depgraph, negdetect, ner, secsplit, ssplit
    from radtext.errors import GraphError, PipelineOrderError, UsageError
    from radtext.shallow_parser import ShallowParser, load_lexicon, parse_document
except ImportError:
    import bioc_model
    import cdm_interop
    import collect
    import config
    import deid
    import depgraph
    import negdetect
    import ner
    import secsplit
    import ssplit
    from errors import GraphError, PipelineOrderError, UsageError
    from shallow_parser import ShallowParser, load_lexicon, parse_document

logger = config.get_logger("pipeline")

ANNOTATORS = ["deid", "secsplit", "ssplit", "ner", "parse", "tree2dep", "neg", "collect"]

# stage -> stages that must have run before it, here or on the input
REQUIRES = {
    "ner": ["ssplit"],
    "parse": ["ssplit"],
    "tree2dep": ["parse"],
    "neg": ["ner", "parse"],
    "collect": ["neg"],
}

# (a, b): when both are requested, a runs first
ORDER = [
    ("deid", "ner"),
    ("deid", "parse"),
    ("secsplit", "ssplit"),
    ("ssplit", "ner"),
    ("ssplit", "parse"),
    ("parse", "tree2dep"),
    ("ner", "neg"),
    ("parse", "neg"),
    ("tree2dep", "neg"),
    ("neg", "collect"),
]


@dataclass
class PipelineConfig:
    """Everything one run needs; resource paths default to the resource directory."""
    annotators: list = field(default_factory=lambda: list(ANNOTATORS))
    input: str = ""
    output: str = ""
    workdir: str = ""
    jobs: int = 1
    resources_dir: str = ""
    phi_rules: str = ""
    section_vocab: str = ""
    abbreviations: str = ""
    concept_vocab: str = ""
    neg_patterns: str = ""
    unc_patterns: str = ""
    findings: str = ""
    lexicon: str = ""
    conllu: str = ""
    redact: bool = False
    precedence: tuple = collect.DEFAULT_PRECEDENCE
    metrics: str = ""
    progress: bool = False

    def resource(self, attr, name):
        return getattr(self, attr) or config.resource_path(name, self.resources_dir or None)


@dataclass
class Stage:
    name: str
    load: object
    apply: object
    bind: object = None


# ──────────────────────────────
# Resource loaders and per-document functions
# ──────────────────────────────
def _load_deid(cfg):
    return deid.load_phi_rules(cfg.resource("phi_rules", config.PHI_RULES_FILE)), cfg.redact


def _apply_deid(document, resource):
    rules, redact = resource
    return deid.deidentify(document, rules, redact=redact)


def _load_parse(cfg):
    graphs = None
    if cfg.conllu:
        try:
            with open(cfg.conllu, encoding="utf-8") as fp:
                graphs = depgraph.parse_conllu(fp.read())
        except OSError as e:
            raise UsageError(f"cannot read {cfg.conllu}: {e}") from None
    return ShallowParser(load_lexicon(cfg.resource("lexicon", config.LEXICON_FILE))), graphs


def _bind_parse(collection, resource):
    """CoNLL-U blocks are handed out to documents in order, one per sentence."""
    parser, graphs = resource
    if graphs is None:
        return resource
    needed = sum(depgraph.sentence_count(d) for d in collection.documents)
    if needed != len(graphs):
        raise GraphError(f"{len(graphs)} CoNLL-U block(s) for {needed} sentence(s)")
    per_document = {}
    start = 0
    for document in collection.documents:
        count = depgraph.sentence_count(document)
        per_document[document.id] = graphs[start:start + count]
        start += count
    return parser, per_document


def _apply_parse(document, resource):
    parser, graphs = resource
    if graphs is not None:
        return depgraph.attach_graphs(document, graphs[document.id])
    return parse_document(document, parser)


def _load_neg(cfg):
    return (
        negdetect.load_patterns(cfg.resource("neg_patterns", config.NEG_PATTERNS_FILE), negdetect.NEGATION)
        + negdetect.load_patterns(cfg.resource("unc_patterns", config.UNC_PATTERNS_FILE), negdetect.UNCERTAINTY)
    )


STAGES = {
    "deid": Stage("deid", _load_deid, _apply_deid),
    "secsplit": Stage(
        "secsplit",
        lambda cfg: secsplit.load_section_vocab(cfg.resource("section_vocab", config.SECTION_VOCAB_FILE)),
        secsplit.split_sections,
    ),
    "ssplit": Stage(
        "ssplit",
        lambda cfg: ssplit.load_abbreviations(cfg.resource("abbreviations", config.ABBREVS_FILE)),
        ssplit.split_sentences,
    ),
    "ner": Stage(
        "ner",
        lambda cfg: ner.load_concept_vocab(cfg.resource("concept_vocab", config.CONCEPT_VOCAB_FILE)),
        ner.match_concepts,
    ),
    "parse": Stage("parse", _load_parse, _apply_parse, _bind_parse),
    "tree2dep": Stage("tree2dep", lambda cfg: depgraph.DEFAULT_HEAD_RULES, depgraph.convert_trees),
    "neg": Stage("neg", _load_neg, negdetect.detect),
}


# ──────────────────────────────
# Order checks
# ──────────────────────────────
def check_order(annotators):
    """This fct rejects unknown, repeated or misordered annotators.

    Raises
    UsageError for unknown or repeated names,
    PipelineOrderError when a pair runs in the wrong order.
    """
    unknown = [a for a in annotators if a not in ANNOTATORS]
    if unknown:
        raise UsageError(f"unknown annotator(s): {', '.join(unknown)}; choose from {', '.join(ANNOTATORS)}")
    if len(set(annotators)) != len(annotators):
        raise UsageError("an annotator is listed twice")
    if not annotators:
        raise UsageError("no annotators given")
    position = {a: i for i, a in enumerate(annotators)}
    for first, second in ORDER:
        if first in position and second in position and position[first] > position[second]:
            raise PipelineOrderError(f"{first} must run before {second}")


def check_requirements(stage, collection, planned=()):
    """This fct makes sure every stage ``stage`` needs ran already or is planned before it."""
    done = set(bioc_model.stages_run(collection)) | set(planned)
    missing = [r for r in REQUIRES.get(stage, []) if r not in done]
    if missing:
        raise PipelineOrderError(f"{stage} needs {', '.join(missing)} to run first")


# ──────────────────────────────
# Running
# ──────────────────────────────
def _annotation_count(collection):
    return sum(
        sum(1 for _ in bioc_model.iter_annotations(document)) for document in collection.documents
    )


def run_stage(name, collection, resource, jobs=1, progress=False):
    """This fct runs one stage over every document of a collection.

    Documents are processed by ``jobs`` threads; the output keeps the input
    document order.

    Returns
    BioCCollection
    """
    stage = STAGES[name]
    check_requirements(name, collection)
    started = time.perf_counter()
    if stage.bind is not None:
        resource = stage.bind(collection, resource)
    logger.info("STAGE name=%s documents=%d jobs=%d", name, len(collection.documents), jobs)

    def one(document):
        return stage.apply(document, resource)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        documents = list(
            tqdm(pool.map(one, collection.documents), total=len(collection.documents), desc=name, disable=not progress)
        )
    result = bioc_model.new_collection(collection.source, collection.date, collection.key)
    result.infons = dict(collection.infons)
    result.documents = documents
    bioc_model.stamp(result, name)

    seconds = time.perf_counter() - started
    annotations = _annotation_count(result)
    config.DOCUMENTS_TOTAL.labels(stage=name).inc(len(documents))
    config.ANNOTATIONS_TOTAL.labels(stage=name).inc(annotations)
    config.STAGE_SECONDS.labels(stage=name).observe(seconds)
    logger.info("DONE name=%s annotations=%d seconds=%.3f", name, annotations, seconds)
    return result


def collect_stage(collection, cfg):
    check_requirements("collect", collection)
    vocab = ner.load_concept_vocab(cfg.resource("concept_vocab", config.CONCEPT_VOCAB_FILE))
    names = {c.concept_id: c.concept_name for c in vocab.concepts}
    findings = collect.load_findings(cfg.resource("findings", config.FINDINGS_FILE))
    records = collect.collect_labels(collection, findings, cfg.precedence, names)
    config.DOCUMENTS_TOTAL.labels(stage="collect").inc(len(collection.documents))
    return records


def read_input(path):
    """BioC XML, a notes CSV (note_id, note_text) or a plain text report."""
    try:
        with open(path, "rb") as fp:
            data = fp.read()
    except OSError as e:
        raise UsageError(f"cannot read input {path}: {e}") from None
    lowered = path.lower()
    if lowered.endswith(".xml"):
        return bioc_model.parse_bioc_xml(data)
    if lowered.endswith(".csv"):
        return cdm_interop.csv2bioc(data)
    stem = os.path.splitext(os.path.basename(path))[0]
    collection = bioc_model.new_collection(source=os.path.basename(path))
    collection.documents.append(bioc_model.new_document(stem, data.decode("utf-8")))
    return collection


def intermediate_path(cfg, stage):
    workdir = cfg.workdir or os.path.dirname(os.path.abspath(cfg.output)) or "."
    stem = os.path.splitext(os.path.basename(cfg.output))[0]
    return os.path.join(workdir, f"{stem}.{stage}.xml")


def run(cfg):
    """This fct runs the requested annotators and saves every intermediate file.

    Parameters
    cfg : PipelineConfig

    Returns
    int
        0 on success; failures raise and leave earlier intermediates in place.
    """
    check_order(cfg.annotators)
    collection = read_input(cfg.input)
    for position, name in enumerate(cfg.annotators):
        check_requirements(name, collection, cfg.annotators[:position])
    if cfg.workdir:
        os.makedirs(cfg.workdir, exist_ok=True)

    records = None
    for name in cfg.annotators:
        if name == "collect":
            records = collect_stage(collection, cfg)
            continue
        resource = STAGES[name].load(cfg)
        collection = run_stage(name, collection, resource, cfg.jobs, cfg.progress)
        bioc_model.write_collection(collection, intermediate_path(cfg, name))

    if records is not None:
        with open(cfg.output, "wb") as fp:
            fp.write(collect.write_labels_csv(records))
    else:
        bioc_model.write_collection(collection, cfg.output)
    if cfg.metrics:
        config.write_metrics(cfg.metrics)
    logger.info("PIPELINE annotators=%s output=%s", ",".join(cfg.annotators), cfg.output)
    return 0


class Pipeline:
    """Library entry point.

    ``Pipeline()(text)`` runs every annotator up to neg on one report;
    ``Pipeline(annotators=["secsplit", "ssplit"])`` runs just those.
    Resources are loaded once, on first use.
    """

    def __init__(self, annotators=None, resources=None, **paths):
        self.annotators = list(annotators) if annotators else [a for a in ANNOTATORS if a != "collect"]
        if "collect" in self.annotators:
            raise UsageError("collect produces a label table; call collect.collect_labels on the result")
        check_order(self.annotators)
        self.config = PipelineConfig(annotators=self.annotators, resources_dir=resources or "", **paths)
        self._resources = {}

    def resource(self, name):
        if name not in self._resources:
            self._resources[name] = STAGES[name].load(self.config)
        return self._resources[name]

    def __call__(self, data, doc_id="report"):
        if isinstance(data, str):
            collection = bioc_model.new_collection()
            collection.documents.append(bioc_model.new_document(doc_id, data))
        else:
            collection = data
        for position, name in enumerate(self.annotators):
            check_requirements(name, collection, self.annotators[:position])
        for name in self.annotators:
            collection = run_stage(name, collection, self.resource(name), self.config.jobs)
        return collection
