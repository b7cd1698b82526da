"""Exception types shared across the package."""


class SwarmSplitError(Exception):
    pass


class ZeroDistance(SwarmSplitError, ValueError):
    """Transmitter and receiver occupy the same point."""


class ParseError(SwarmSplitError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(SwarmSplitError, ValueError):
    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class Infeasible(SwarmSplitError):
    """No layer assignment satisfies the memory, compute and link constraints."""


class InfeasibleHint(Infeasible):
    """Raised early when total memory demand exceeds total swarm memory."""


class TooLarge(SwarmSplitError):
    """Brute-force enumeration guard exceeded."""


class SolverTimeout(SwarmSplitError):
    """Time limit hit.  ``incumbent`` is the best placement found, or None."""

    def __init__(self, message, incumbent=None):
        super().__init__(message)
        self.incumbent = incumbent


class InfeasiblePlacement(SwarmSplitError):
    """A placement violates a named constraint; ``step`` is 1-based when known."""

    def __init__(self, constraint, message, step=None):
        self.constraint = constraint
        self.step = step
        where = f" at step {step}" if step is not None else ""
        super().__init__(f"{constraint}{where}: {message}")
