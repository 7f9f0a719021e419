"""Exception hierarchy shared across the package."""


class SimoptError(Exception):
    """Base class for all package errors."""


class ConfigError(SimoptError):
    """Invalid solver or experiment configuration. CLI maps this to exit code 2."""


class InvalidSolutionError(SimoptError):
    """Solution index vector does not fit the search space."""


class EmptyNeighborhoodError(SimoptError):
    """A solution has no neighbors; the solver must treat it as terminal."""


class DegenerateSplitError(SimoptError):
    """A holdout split left the train or validation side empty."""


class EvaluationError(SimoptError):
    """An objective evaluation failed; carries the underlying message."""


class OutOfRangeError(EvaluationError):
    """An observation fell outside the objective's declared bounds."""


class WorkerError(EvaluationError):
    """External worker process failed. CLI maps this to exit code 3."""
