"""Exception hierarchy shared by all modules.

``AnalysisError`` covers violated algorithmic preconditions (CLI exit code 1),
``InputFormatError`` covers unreadable or malformed inputs (CLI exit code 2).
"""


class GraphSomError(Exception):
    """Base class for all errors raised by this package."""


class AnalysisError(GraphSomError):
    """A computation precondition is violated (bad parameter, wrong graph shape...)."""


class InputFormatError(GraphSomError):
    """An input file or stream could not be parsed."""
