"""Exception hierarchy.

Every error raised by the package derives from :class:`EmpDistError`. The
second-level classes map onto CLI exit codes (see :mod:`empdist.cli`).
"""


class EmpDistError(Exception):
    pass


# -- configuration ---------------------------------------------------------

class ConfigInvalid(EmpDistError):
    """Raised with one message per offending field."""

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("invalid config: " + "; ".join(self.messages))


# -- data ------------------------------------------------------------------

class DataError(EmpDistError):
    pass


class MissingDataFile(DataError):
    pass


class MissingColumn(DataError):
    pass


class MalformedRow(DataError):
    pass


class NonNumericLabel(DataError):
    pass


class DuplicateId(DataError):
    pass


class EmptyEssay(DataError):
    pass


class ScoreOutOfRange(DataError):
    pass


class MissingLabel(DataError):
    pass


class AlignmentError(DataError):
    pass


# -- encoders and training ---------------------------------------------------

class EncoderError(EmpDistError):
    pass


class UnknownEncoder(EncoderError):
    pass


class EncoderLoadFailure(EncoderError):
    pass


class EmptySequence(EncoderError):
    pass


class TrainingError(EmpDistError):
    pass


class DegenerateLabels(TrainingError):
    pass


class NonFiniteLoss(TrainingError):
    def __init__(self, epoch, loss):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"non-finite training loss {loss!r} at epoch {epoch}")


# -- ensembling ------------------------------------------------------------

class EnsembleError(EmpDistError):
    pass


class ShapeMismatch(EnsembleError):
    pass


class TargetMismatch(EnsembleError):
    pass


class FingerprintMismatch(EnsembleError):
    pass


class ColumnMismatch(EnsembleError):
    pass


class DegenerateGold(EnsembleError):
    pass


# -- artifacts -------------------------------------------------------------

class MissingArtifact(EmpDistError):
    pass


# -- metrics ---------------------------------------------------------------

class MetricError(EmpDistError):
    pass


class LengthMismatch(MetricError):
    pass


class ZeroVariance(MetricError):
    pass


class TooFew(MetricError):
    pass


class OutOfRange(MetricError):
    pass
