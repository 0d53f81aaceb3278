"""Exception hierarchy shared by every modalign module."""


class ModalignError(Exception):
    """Base class for all toolkit errors."""


class FormatError(ModalignError):
    """On-disk bytes do not conform to their declared file format."""


class ValidationError(ModalignError):
    """A value violates a documented invariant or operation precondition."""


class TrainingError(ModalignError):
    """Training aborted mid-run (e.g. the loss became non-finite)."""
