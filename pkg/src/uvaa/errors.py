"""Exception types shared across the package."""


class UvaaError(Exception):
    """Base class for all package-specific errors."""


class DegenerateArrayError(UvaaError):
    """All excitation weights are zero; the beam pattern is undefined."""


class ZeroDistanceError(UvaaError):
    """Channel gain requested for a zero-length link."""


class CoincidentPointsError(UvaaError):
    """Direction requested between two identical points."""


class PlacementFailureError(UvaaError):
    """Rejection sampling could not place the swarm inside the box."""


class EpisodeFinishedError(UvaaError):
    """step() called after the final time slot."""


class ShapeMismatchError(UvaaError):
    """Array shapes inconsistent with the declared network layout."""


class NonFiniteGradientError(UvaaError):
    """A gradient contained NaN or infinity."""


class NonFiniteLossError(UvaaError):
    """A training loss became NaN or infinite; the update was rolled back."""


class DimensionMismatchError(UvaaError):
    """Objective vectors of unequal dimension were compared."""


class EmptyFrontError(UvaaError):
    """A quality indicator was called with an empty point set."""


class PointBelowReferenceError(UvaaError):
    """A front point does not dominate the hypervolume reference point."""


class CheckpointError(UvaaError):
    """Checkpoint file is malformed or does not match the expected layout."""


class ConfigError(UvaaError):
    """Experiment configuration is malformed; message names the offending key."""
