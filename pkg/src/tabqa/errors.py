"""Exception types shared across the package."""


class TabqaError(Exception):
    """Base class for package-specific errors."""


class FormatError(TabqaError):
    """Malformed input file, manifest, or serialized index."""


class DanglingReferenceError(FormatError):
    """Manifest instance references a table_id that is not declared."""


class RemoteError(TabqaError):
    """Remote LM or encoder call failed after all retries."""


class ScriptExhaustedError(TabqaError):
    """Scripted chat model has no remaining reply matching the prompt."""


class EmptyInputError(TabqaError):
    """Embedding request carried no texts, or a text that is empty after trim."""


class DimMismatchError(TabqaError):
    """Vector dimensionality differs from what the index declares."""


class ParseFailureError(TabqaError):
    """Reply does not contain a JSON array of strings."""


class NoFinalAnswerError(TabqaError):
    """Reply carries no 'Final Answer:' marker."""


class EmptyGoldError(TabqaError):
    """Retrieval metrics require a non-empty gold set."""


class InvalidTargetError(TabqaError):
    """Synthetic expansion target is smaller than the source table."""
