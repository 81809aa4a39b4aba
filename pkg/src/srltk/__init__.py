"""SRL pipeline toolkit: corpora, IOB decoding, span evaluation, folds, experiments."""

__version__ = "0.1.0"

FORMAT_VERSIONS = {
    "conll": "1",
    "xml": "1",
    "emissions": "1",
    "run-record": "1",
}


class SrlError(Exception):
    """Base class for data-level errors (CLI exit code 2)."""


class ParseError(SrlError):
    """Malformed input file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
