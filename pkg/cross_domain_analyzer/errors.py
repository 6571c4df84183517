"""
Exceptions raised by the analyzer.
"""


class CDLError(Exception):
    """
    Base class for every error raised by the analyzer.
    """


class InvalidConfig(CDLError, ValueError):
    """Configuration values violate their invariants."""


class MissingLabel(CDLError, ValueError):
    """A labeled-set record lacks its weak label."""


class LengthMismatch(CDLError, ValueError):
    """Two sequences that must share a length do not."""


class BadMagic(CDLError, ValueError):
    """A feature file does not start with the expected magic bytes."""


class ShapeMismatch(CDLError, ValueError):
    """Declared and actual shapes disagree."""


class NonFiniteData(CDLError, ValueError):
    """A matrix contains NaN or infinite entries."""


class EmptyBlob(CDLError, ValueError):
    """A feature blob has no timesteps."""


class OddDimension(CDLError, ValueError):
    """Sinusoidal encodings need an even width."""


class DimensionMismatch(CDLError, ValueError):
    """Input width does not match the head's encoder width."""


class NonScalarLoss(CDLError, ValueError):
    """A loss closure returned something other than a scalar."""


class DegenerateCorpus(CDLError, ValueError):
    """The labeled corpus lacks abnormal or normal videos."""


class MissingFeatures(CDLError, LookupError):
    """A record has no blob for a required stream."""


class InsufficientVideos(CDLError, ValueError):
    """Not enough videos to compose a batch."""


class EmptyVideo(CDLError, ValueError):
    """A video has zero frames."""


class SingleClass(CDLError, ValueError):
    """ROC-AUC needs both classes."""


class NoPositives(CDLError, ValueError):
    """Average precision needs at least one positive."""


class ConstantInput(CDLError, ValueError):
    """Rank correlation is undefined for constant input."""


class EmptyInput(CDLError, ValueError):
    """An operation received no values."""


class TooFewClasses(CDLError, ValueError):
    """The corpus declares fewer anomaly classes than requested."""


class TooFewNormals(CDLError, ValueError):
    """Not enough normal videos to balance a split."""


class MissingGroundTruth(CDLError, ValueError):
    """A diagnostic needs frame labels that are absent."""


class InvalidSpec(CDLError, ValueError):
    """A synthetic corpus specification is invalid."""


class MissingFrameLabels(CDLError, ValueError):
    """Evaluation needs frame labels that are absent."""


class MissingLogs(CDLError, FileNotFoundError):
    """A run directory lacks its training log or checkpoints."""
