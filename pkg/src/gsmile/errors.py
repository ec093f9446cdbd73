"""Exception and warning types shared across the package."""


class GsmileError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(GsmileError):
    """Run configuration is missing, malformed, or out of range."""


# --- prompt decomposition ---------------------------------------------------

class EmptyPromptError(GsmileError):
    """Prompt contains no tokens after whitespace splitting."""


class ExhaustiveTooLargeError(GsmileError):
    """Exhaustive mask enumeration requested for more than 16 tokens."""


class LengthMismatchError(GsmileError):
    """Paired sequences disagree in length."""


# --- embeddings and point clouds --------------------------------------------

class ParseError(GsmileError):
    """A text table or point-cloud payload does not match its format."""


class EmptyTableError(GsmileError):
    """Embedding table holds no entries."""


class AllTokensOOVError(GsmileError):
    """Every token of a document is missing from the embedding table."""


class EmptyCloudError(GsmileError):
    """Point cloud holds no points."""


# --- transport distances ----------------------------------------------------

class DimensionMismatchError(GsmileError):
    """Point clouds live in spaces of different dimension."""


class EmptyInputError(GsmileError):
    """An operation received an empty sample or cloud."""


class NonPositiveSigmaError(GsmileError):
    """Kernel bandwidth must be strictly positive."""


# --- surrogate fitting ------------------------------------------------------

class ShapeMismatchError(GsmileError):
    """Design matrix, targets, and weights disagree in shape."""


class AllZeroWeightsError(GsmileError):
    """Every sample weight is zero; the fit is undefined."""


# --- significance -----------------------------------------------------------

class MixedSampleKindsError(GsmileError):
    """Bootstrap samples mix scalars with vectors, or vector widths differ."""


# --- metrics ----------------------------------------------------------------

class DegenerateTruthError(GsmileError):
    """Ground truth has no positive or no negative labels."""


class KTooLargeError(GsmileError):
    """Top-k size exceeds the shorter coefficient list."""


class TooFewRunsError(GsmileError):
    """Consistency statistics need at least two runs."""


class DegenerateVarianceError(GsmileError):
    """Targets are constant, so variance-based scores are undefined."""


class AdjustedUndefinedError(GsmileError):
    """Adjusted R-squared denominator is zero for this sample count."""


# --- adapters ---------------------------------------------------------------

class AdapterError(GsmileError):
    """Base class for model-adapter failures."""


class AdapterTimeoutError(AdapterError):
    """The model did not answer within the configured timeout."""


class TransportError(AdapterError):
    """HTTP or subprocess transport failed before a response arrived."""


class MalformedResponseError(AdapterError):
    """The model answered, but the payload does not match the contract."""


class CacheIOError(GsmileError):
    """The response cache could not be read or written."""


# --- warnings ---------------------------------------------------------------

class InsufficientRecordsWarning(UserWarning):
    """Fewer records survived filtering than the surrogate has unknowns."""


class DegenerateFidelityWarning(UserWarning):
    """Fit quality scores were skipped because the targets are constant."""


class CacheUnavailableWarning(UserWarning):
    """The response cache failed; the run continues without it."""


class DroppedRecordsWarning(UserWarning):
    """Records lost every in-vocabulary token under masking and were dropped."""
