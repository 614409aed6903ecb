"""
Exceptions raised by ies.

There are two types of exceptions:
- Private / internal use only: Prefixed with "_Ies"
- Public / user-facing / part of the public API: Not prefixed with anything.
  Have a descriptive name, and have no mention of "Ies" in the name.
"""


class IesException(Exception):
    """Base exception for all ies exceptions."""

    pass


class _IesNodeInfeasible(IesException):
    """Internal signal from the relaxation solver: the LP at a node is infeasible.

    Not part of the public API. branch_and_bound prunes the node; solve_relaxation
    turns it into an ``infeasible`` SolveResult.
    """


class ScenarioError(IesException, ValueError):
    """
    Raised when a scenario file or object violates the schema or an invariant.

    Attributes:
        field: Dotted path of the offending field (e.g. "wind.availability[3]").
        message: Human-readable description.
    """

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class ModelError(IesException, ValueError):
    """Raised when a constraint builder receives inputs outside its preconditions."""

    pass


class SolverError(IesException, RuntimeError):
    """
    Raised on numerical failure of the conic solver. Never swallowed.

    Attributes:
        message: Human-readable description, including node context when raised
            inside branch_and_bound.
        residual: Largest cone violation (or LP status code) at the point of failure.
    """

    def __init__(self, message: str, residual: float | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.residual = residual


class SolveFailed(IesException):
    """
    Raised by the runner when the search ends without a feasible point.

    Attributes:
        status: Solver status ("infeasible", "node-limit" or "time-limit").
        message: Human-readable description.
    """

    def __init__(self, status: str, message: str) -> None:
        super().__init__(message)
        self.status = status
        self.message = message


class InstanceTooLarge(IesException):
    """
    Raised by the brute-force oracles when an instance exceeds what they enumerate.

    Attributes:
        limit: Largest accepted size.
        actual: Size of the instance.
        message: Human-readable description.
    """

    def __init__(self, limit: int, actual: int, message: str) -> None:
        super().__init__(message)
        self.limit = limit
        self.actual = actual
        self.message = message


class SearchLimitExceeded(IesException):
    """
    Raised when a branch-and-bound search limit is reached (max_nodes, time_limit_s).

    Attributes:
        limit: Identifier of the limit that fired ("max_nodes" or "time_limit_s").
        threshold: Configured limit that was reached.
        actual: Current value that reached the threshold.
        message: Human-readable description.
    """

    def __init__(
        self,
        limit: str,
        threshold: int | float,
        actual: int | float,
        message: str,
    ) -> None:
        super().__init__(message)
        self.limit = limit
        self.threshold = threshold
        self.actual = actual
        self.message = message
