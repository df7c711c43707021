"""Exception hierarchy shared by all modules."""


class TrajdistError(Exception):
    """Base class for package errors."""


class InvalidInputError(TrajdistError, ValueError):
    """Malformed trajectories, files or parameters."""


class InstanceTooLargeError(TrajdistError):
    """Exact enumeration would exceed the configured budget."""


class InfeasiblePatternError(TrajdistError):
    """A sparsity mask admits no doubly stochastic matrix."""


class NotConvergedError(TrajdistError):
    """An iterative solver stopped before certifying its tolerance."""
