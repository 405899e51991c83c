# radtext/errors.py
"""
This is the file with all the custom exceptions of radtext.
Each one carries the exit code the command line returns when it escapes a stage.
"""

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_ORDER = 2
EXIT_USAGE = 64
EXIT_DATA = 65


class RadTextError(Exception):
    """Base class for every error raised on purpose by radtext."""
    exit_code = EXIT_FAILURE


class UsageError(RadTextError):
    """Raised when the command line is called wrong (64)."""
    exit_code = EXIT_USAGE


class PipelineOrderError(RadTextError):
    """Raised when annotators run out of dependency order (2)."""
    exit_code = EXIT_ORDER


class ConfigError(RadTextError):
    """Raised when a resource file or a column setting is unusable (65)."""
    exit_code = EXIT_DATA


class PatternSyntaxError(ConfigError):
    """Raised when a negation/uncertainty pattern does not compile."""

    def __init__(self, message, column=None):
        self.column = column
        if column is not None:
            message = f"column {column}: {message}"
        super().__init__(message)


class DataError(RadTextError):
    """Raised when input data is malformed (65)."""
    exit_code = EXIT_DATA


class BiocParseError(DataError):
    """Raised when BioC XML is not well-formed."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class BiocSchemaError(DataError):
    """Raised when BioC XML uses elements or values outside the vocabulary."""
    pass


class BiocValidationError(DataError):
    """Raised when a collection breaks offset/id/relation invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = [f"{v.path}: {v.kind}: {v.message}" for v in self.violations]
        super().__init__(f"{len(lines)} violation(s)\n" + "\n".join(lines))


class ConversionError(DataError):
    """Raised when a BioC annotation cannot become a NOTE_NLP row."""
    pass


class AlignmentError(DataError):
    """Raised when graph tokens cannot be found in the sentence text."""
    pass


class ConllError(DataError):
    """Raised when a CoNLL-U block cannot be read."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TreeParseError(DataError):
    """Raised when a bracketed tree is unbalanced."""

    def __init__(self, message, position=None):
        self.position = position
        super().__init__(message)


class GraphError(DataError):
    """Raised when a dependency graph is not a single rooted tree."""
    pass
