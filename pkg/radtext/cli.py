# radtext/cli.py
"""
This is the file with the command line.

``radtext <command> -i INPUT -o OUTPUT [options]`` runs one stage or converter;
``radtext run --annotators deid,secsplit,...`` chains stages and keeps every
intermediate file. Each command also has its own entry point
(``radtext-deid`` is ``radtext deid``).
"""
import argparse
import os
import sys

try:
    from radtext import bioc_model, cdm_interop, collect, config, pipeline
    from radtext.errors import EXIT_FAILURE, RadTextError, UsageError
    from radtext.resources import USER_RESOURCES_DIR, download
except ImportError:
    import bioc_model
    import cdm_interop
    import collect
    import config
    import pipeline
    from errors import EXIT_FAILURE, RadTextError, UsageError
    from resources import USER_RESOURCES_DIR, download

logger = config.get_logger("cli")

STAGE_COMMANDS = ["deid", "secsplit", "ssplit", "ner", "parse", "tree2dep", "neg"]
CONVERTERS = ["csv2bioc", "cdm2bioc", "bioc2cdm"]

# command -> (flag, PipelineConfig field, help)
RESOURCE_FLAGS = {
    "deid": [("--rules", "phi_rules", "PHI rule file (YAML)")],
    "secsplit": [("--vocab", "section_vocab", "section title vocabulary (CSV)")],
    "ssplit": [("--abbrevs", "abbreviations", "abbreviation list, one per line")],
    "ner": [("--vocab", "concept_vocab", "concept vocabulary (YAML)")],
    "parse": [("--lexicon", "lexicon", "word/tag lexicon for the built-in parser")],
    "tree2dep": [],
    "neg": [
        ("--neg-patterns", "neg_patterns", "negation patterns, id<TAB>pattern"),
        ("--uncertainty-patterns", "unc_patterns", "uncertainty patterns, id<TAB>pattern"),
    ],
    "collect": [
        ("--findings", "findings", "finding ids to report, one per line"),
        ("--vocab", "concept_vocab", "concept vocabulary, for finding names"),
    ],
    "run": [
        ("--phi-rules", "phi_rules", "PHI rule file (YAML)"),
        ("--section-vocab", "section_vocab", "section title vocabulary (CSV)"),
        ("--abbrevs", "abbreviations", "abbreviation list"),
        ("--concept-vocab", "concept_vocab", "concept vocabulary (YAML)"),
        ("--lexicon", "lexicon", "word/tag lexicon for the built-in parser"),
        ("--neg-patterns", "neg_patterns", "negation patterns"),
        ("--uncertainty-patterns", "unc_patterns", "uncertainty patterns"),
        ("--findings", "findings", "finding ids to report"),
    ],
}


class CliParser(argparse.ArgumentParser):
    """argparse that raises UsageError (exit 64) instead of exiting with 2."""

    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage().strip()}")


# ──────────────────────────────
# Parser
# ──────────────────────────────
def _add_io(p, output_required=True):
    p.add_argument("-i", "--input", required=True, help="input file (BioC XML, notes CSV or text)")
    p.add_argument("-o", "--output", required=output_required, help="output file")


def _add_common(p, command):
    p.add_argument("--resources", default="", help="resource directory (default: $RADTEXT_RESOURCES)")
    p.add_argument("--jobs", type=int, default=1, help="documents processed in parallel within a stage")
    p.add_argument("--metrics", default="", help="write Prometheus metrics to this file")
    p.add_argument("--progress", action="store_true", help="show a progress bar per stage")
    for flag, dest, text in RESOURCE_FLAGS.get(command, []):
        p.add_argument(flag, dest=dest, default="", help=text)


def build_parser():
    parser = CliParser(prog="radtext", description="Radiology report processing, one stage at a time or chained.")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=CliParser)

    for name in STAGE_COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} stage")
        _add_io(p)
        _add_common(p, name)
        if name == "deid":
            p.add_argument("--redact", action="store_true", help="drop PHI annotations after masking")
        if name == "parse":
            p.add_argument("--conllu", default="", help="attach graphs from a CoNLL-U file instead of parsing")

    p = sub.add_parser("collect", help="merge findings into one label per report")
    _add_io(p)
    _add_common(p, "collect")
    p.add_argument("--precedence", default=",".join(collect.DEFAULT_PRECEDENCE),
                   help="merge order, e.g. positive,uncertain,negative")

    p = sub.add_parser("csv2bioc", help="notes CSV to BioC XML")
    _add_io(p)
    p.add_argument("--id-column", default="note_id")
    p.add_argument("--text-column", default="note_text")

    p = sub.add_parser("cdm2bioc", help="NOTE_NLP CSV to BioC XML")
    _add_io(p)
    p.add_argument("--notes", default="", help="notes CSV giving each note's text")

    p = sub.add_parser("bioc2cdm", help="BioC XML to NOTE_NLP CSV")
    _add_io(p)

    p = sub.add_parser("download", help="copy the bundled resources into a user directory")
    p.add_argument("-o", "--output", default=USER_RESOURCES_DIR, help="target directory")

    p = sub.add_parser("run", help="run several annotators in order")
    _add_io(p)
    _add_common(p, "run")
    p.add_argument("--annotators", default=",".join(pipeline.ANNOTATORS),
                   help="comma-separated subset of " + ",".join(pipeline.ANNOTATORS))
    p.add_argument("--workdir", default="", help="where intermediate files go (default: next to the output)")
    p.add_argument("--conllu", default="")
    p.add_argument("--redact", action="store_true")
    p.add_argument("--precedence", default=",".join(collect.DEFAULT_PRECEDENCE))
    return parser


def config_from_args(args, annotators):
    """This fct maps parsed arguments onto a PipelineConfig."""
    if getattr(args, "jobs", 1) < 1:
        raise UsageError("--jobs must be at least 1")
    cfg = pipeline.PipelineConfig(
        annotators=annotators,
        input=args.input,
        output=args.output,
        workdir=getattr(args, "workdir", ""),
        jobs=getattr(args, "jobs", 1),
        resources_dir=getattr(args, "resources", ""),
        conllu=getattr(args, "conllu", ""),
        redact=getattr(args, "redact", False),
        metrics=getattr(args, "metrics", ""),
        progress=getattr(args, "progress", False),
    )
    for _, dest, _ in RESOURCE_FLAGS.get(args.command, []):
        setattr(cfg, dest, getattr(args, dest))
    if getattr(args, "precedence", None):
        cfg.precedence = collect.parse_precedence(args.precedence)
    return cfg


# ──────────────────────────────
# Commands
# ──────────────────────────────
def _read_bytes(path):
    try:
        with open(path, "rb") as fp:
            return fp.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e}") from None


def _write_bytes(path, data):
    with open(path, "wb") as fp:
        fp.write(data)


def _finish(cfg):
    if cfg.metrics:
        config.write_metrics(cfg.metrics)
    return 0


def cmd_stage(args):
    """This fct runs one stage on a file and writes the resulting BioC."""
    cfg = config_from_args(args, [args.command])
    collection = pipeline.read_input(cfg.input)
    pipeline.check_requirements(args.command, collection)
    resource = pipeline.STAGES[args.command].load(cfg)
    collection = pipeline.run_stage(args.command, collection, resource, cfg.jobs, cfg.progress)
    bioc_model.write_collection(collection, cfg.output)
    return _finish(cfg)


def cmd_collect(args):
    cfg = config_from_args(args, ["collect"])
    records = pipeline.collect_stage(pipeline.read_input(cfg.input), cfg)
    _write_bytes(cfg.output, collect.write_labels_csv(records))
    logger.info("LABELS records=%d output=%s", len(records), cfg.output)
    return _finish(cfg)


def cmd_csv2bioc(args):
    collection = cdm_interop.csv2bioc(_read_bytes(args.input), args.id_column, args.text_column)
    bioc_model.stamp(collection, "csv2bioc")
    bioc_model.write_collection(collection, args.output)
    return 0


def cmd_cdm2bioc(args):
    rows = cdm_interop.read_note_nlp_csv(_read_bytes(args.input))
    notes = cdm_interop.read_notes_csv(_read_bytes(args.notes)) if args.notes else None
    collection = cdm_interop.cdm2bioc(rows, notes)
    bioc_model.stamp(collection, "cdm2bioc")
    bioc_model.write_collection(collection, args.output)
    return 0


def cmd_bioc2cdm(args):
    collection = bioc_model.parse_bioc_xml(_read_bytes(args.input))
    _write_bytes(args.output, cdm_interop.write_note_nlp_csv(cdm_interop.bioc2cdm(collection)))
    return 0


def cmd_download(args):
    written = download(args.output)
    print(f"{len(written)} file(s) written to {os.path.abspath(args.output)}")
    return 0


def cmd_run(args):
    annotators = [a.strip() for a in args.annotators.split(",") if a.strip()]
    return pipeline.run(config_from_args(args, annotators))


COMMANDS = {name: cmd_stage for name in STAGE_COMMANDS}
COMMANDS.update({
    "collect": cmd_collect,
    "csv2bioc": cmd_csv2bioc,
    "cdm2bioc": cmd_cdm2bioc,
    "bioc2cdm": cmd_bioc2cdm,
    "download": cmd_download,
    "run": cmd_run,
})


def main(argv=None, command=None):
    """This fct is the entry point of every console script.

    Parameters
    argv : list of str or None
        Arguments without the program name (default ``sys.argv[1:]``).
    command : str or None
        Set by the ``radtext-<command>`` aliases.

    Returns
    int
        Exit status: 0 ok, 2 order error, 64 usage, 65 bad data, 1 otherwise.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    if command:
        argv.insert(0, command)
    config.init_sentry()
    name = argv[0] if argv else ""
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise UsageError("no command given; try radtext --help")
        return COMMANDS[args.command](args)
    except RadTextError as e:
        logger.error("FAILED command=%s code=%d error=%s", name, e.exit_code, e)
        print(f"radtext: error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception("UNEXPECTED command=%s", name)
        config.report_exception(e)
        print(f"radtext: unexpected error: {e}", file=sys.stderr)
        return EXIT_FAILURE


def _alias(command):
    def entry():
        return main(command=command)
    entry.__name__ = f"radtext_{command}"
    entry.__doc__ = f"``radtext-{command}``: same as ``radtext {command}``."
    return entry


radtext_deid = _alias("deid")
radtext_secsplit = _alias("secsplit")
radtext_ssplit = _alias("ssplit")
radtext_ner = _alias("ner")
radtext_parse = _alias("parse")
radtext_tree2dep = _alias("tree2dep")
radtext_neg = _alias("neg")
radtext_collect = _alias("collect")
radtext_csv2bioc = _alias("csv2bioc")
radtext_cdm2bioc = _alias("cdm2bioc")
radtext_bioc2cdm = _alias("bioc2cdm")
radtext_download = _alias("download")
radtext_run = _alias("run")


if __name__ == "__main__":
    sys.exit(main())
