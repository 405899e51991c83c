# radtext/config.py
"""
This is the file that holds the settings every stage reads.
Paths and stamps come from environment variables with defaults next to the
package, and the shared logger and metrics live here too.
"""
import os
import logging
import datetime

from prometheus_client import CollectorRegistry, Counter, Histogram, write_to_textfile

BASE_DIR = os.path.dirname(__file__)
DEFAULT_RESOURCES_DIR = os.path.join(BASE_DIR, "resources")
RESOURCES_DIR = os.environ.get("RADTEXT_RESOURCES", DEFAULT_RESOURCES_DIR)

LOG_DIR = os.environ.get("RADTEXT_LOG_DIR", os.path.join(BASE_DIR, "logs"))
LOG_LEVEL = os.environ.get("RADTEXT_LOG_LEVEL", "INFO")

NLP_SYSTEM = os.environ.get("RADTEXT_NLP_SYSTEM", "RadText")
NLP_DATE = os.environ.get("RADTEXT_NLP_DATE") or datetime.date.today().isoformat()

SENTRY_DSN = os.environ.get("RADTEXT_SENTRY_DSN", "")

# bundled resource file names
PHI_RULES_FILE = "phi_rules.yml"
SECTION_VOCAB_FILE = "section_titles.csv"
ABBREVS_FILE = "abbreviations.txt"
CONCEPT_VOCAB_FILE = "concepts.yml"
NEG_PATTERNS_FILE = "patterns_negation.tsv"
UNC_PATTERNS_FILE = "patterns_uncertainty.tsv"
FINDINGS_FILE = "findings.txt"
LEXICON_FILE = "lexicon.tsv"
SAMPLE_REPORT_FILE = "sample_report.txt"

RESOURCE_FILES = [
    PHI_RULES_FILE,
    "names.txt",
    SECTION_VOCAB_FILE,
    ABBREVS_FILE,
    CONCEPT_VOCAB_FILE,
    NEG_PATTERNS_FILE,
    UNC_PATTERNS_FILE,
    FINDINGS_FILE,
    LEXICON_FILE,
    SAMPLE_REPORT_FILE,
]


def resource_path(name, resources_dir=None):
    """This fct returns the full path of a resource file.

    Parameters
    name : str
        File name inside the resource directory.
    resources_dir : str or None
        Directory to use instead of the configured one.

    Returns
    str
    """
    return os.path.join(resources_dir or RESOURCES_DIR, name)


# ── Logging setup ─────────────────────────────────────────────
logger = logging.getLogger("radtext")
logger.setLevel(LOG_LEVEL)

if not logger.handlers:
    try:
        os.makedirs(LOG_DIR, exist_ok=True)
        file_handler = logging.FileHandler(os.path.join(LOG_DIR, "radtext.log"))
    except OSError:
        # read-only install: fall back to stderr
        file_handler = logging.StreamHandler()
    formatter = logging.Formatter("%(asctime)s [%(levelname)s] %(message)s")
    file_handler.setFormatter(formatter)
    logger.addHandler(file_handler)


def get_logger(stage):
    """Child logger for one stage, e.g. ``radtext.deid``."""
    return logger.getChild(stage)


# ── Error reporting ─────────────────────────────────────────────
_sentry_ready = False


def init_sentry():
    """This fct turns on sentry only when a DSN is configured.

    Returns
    bool
        True if sentry was initialised.
    """
    global _sentry_ready
    if not SENTRY_DSN:
        return False
    if not _sentry_ready:
        import sentry_sdk
        sentry_sdk.init(dsn=SENTRY_DSN, traces_sample_rate=1.0)
        _sentry_ready = True
    return True


def report_exception(exc):
    if _sentry_ready:
        import sentry_sdk
        sentry_sdk.capture_exception(exc)


# ── Metrics ─────────────────────────────────────────────
REGISTRY = CollectorRegistry()

DOCUMENTS_TOTAL = Counter(
    "radtext_documents_total",
    "Documents processed per stage",
    ["stage"],
    registry=REGISTRY,
)
ANNOTATIONS_TOTAL = Counter(
    "radtext_annotations_total",
    "Annotations present after each stage",
    ["stage"],
    registry=REGISTRY,
)
STAGE_SECONDS = Histogram(
    "radtext_stage_seconds",
    "Wall time per stage",
    ["stage"],
    registry=REGISTRY,
)


def write_metrics(path):
    write_to_textfile(path, REGISTRY)
