"""Exception hierarchy shared by every glrfair module."""


class GlrfairError(Exception):
    """Base class for all errors raised by glrfair."""


class DataError(GlrfairError, ValueError):
    """Malformed input data: missing cells, bad labels, bad column specs."""


class ConfigError(GlrfairError, ValueError):
    """Invalid or incomplete experiment configuration."""


class NumericalError(GlrfairError, ArithmeticError):
    """Training produced a non-finite loss or parameters.

    ``epoch`` holds the epoch index at which the failure was detected.
    """

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class UndefinedMetricError(GlrfairError, ValueError):
    """A metric's denominator is empty (e.g. FNR without positives)."""


class ExperimentError(GlrfairError):
    """A fold or variant failed; carries the structured diagnostic."""

    def __init__(self, message, *, fold=None, variant=None, cause=None):
        super().__init__(message)
        self.fold = fold
        self.variant = variant
        self.cause = cause

    def diagnostic(self):
        return {
            "error": type(self.cause).__name__ if self.cause else type(self).__name__,
            "message": str(self),
            "fold": self.fold,
            "variant": self.variant,
            "epoch": getattr(self.cause, "epoch", None),
        }
