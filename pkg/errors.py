"""Exception hierarchy shared by every module.

Each error carries a short ``kind`` used by the CLI when it prints its
single-line failure message.
"""


class AcmapError(Exception):
    """Base class for all engine errors"""
    kind = "runtime"


class ShapeError(AcmapError, ValueError):
    """Array shapes do not conform"""
    kind = "shape"


class ConfigError(AcmapError, ValueError):
    """Invalid configuration value or combination"""
    kind = "config"


class DataError(AcmapError, ValueError):
    """Dataset content violates a precondition"""
    kind = "data"


class FormatError(AcmapError):
    """Binary or text file does not follow its declared format"""
    kind = "format"

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DivergenceError(AcmapError):
    """Training produced a non-finite loss"""
    kind = "divergence"

    def __init__(self, epoch, batch, loss):
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch
        self.loss = loss


class AlignmentError(AcmapError):
    """Prototype matrices or shifts refer to mismatched tasks, classes or tags"""
    kind = "alignment"


class IncompleteStoreError(AcmapError):
    """Prototype store lacks a task needed to build the classifier"""
    kind = "incomplete_store"


class IncompleteArtifactsError(AcmapError):
    """Run artifacts lack snapshots or retained data needed by diagnostics"""
    kind = "incomplete_artifacts"


class DegenerateVectorError(AcmapError, ValueError):
    """A zero-norm vector was passed where a direction is required"""
    kind = "degenerate"


class NumericError(AcmapError):
    """A numeric evaluation returned a non-finite value"""
    kind = "numeric"


class UsageError(AcmapError):
    """Unknown subcommand, flag or malformed argument"""
    kind = "usage"
