"""Exception types shared across the pipeline."""


class GazeGrammarError(Exception):
    """Base class for all library errors."""


class PixelBoundsError(GazeGrammarError):
    """Gaze pixel outside the camera image; message names the offending axis."""


class DepthError(GazeGrammarError):
    """Non-positive or non-finite depth reading."""


class FrameMismatchError(GazeGrammarError):
    """A point or transform was used in the wrong coordinate frame."""


class CalibrationError(GazeGrammarError):
    """Wrist-offset calibration produced an implausible result."""


class SceneError(GazeGrammarError):
    """Scene document malformed or violates object-taxonomy rules."""


class ConfigError(GazeGrammarError):
    """Configuration file malformed; message carries the offending key path."""


class GrammarViolationError(GazeGrammarError):
    """An action was about to be emitted that the action grammar forbids."""


class ProtocolError(GazeGrammarError):
    """Robot or session command issued in an invalid order."""

class StatsError(GazeGrammarError):
    """Statistic undefined for the given data (e.g. zero variance)."""
