"""Exception types shared across the library.

Plain ``ValueError`` is used for ordinary precondition violations
(dimension mismatches, empty inputs, bad parameter ranges); the classes
here mark failures a caller may want to handle separately.
"""


class TrainingDivergedError(RuntimeError):
    """Raised when the feature-map optimizer hits a non-finite loss.

    Attributes:
        step: Global gradient-step index at which the loss became non-finite.
    """

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"training loss became non-finite at step {step}")


class PSDViolationError(RuntimeError):
    """Raised when a quadratic-form score is negative beyond float slack.

    A well-formed density matrix is positive semidefinite, so a score below
    -1e-10 signals corrupted state rather than rounding noise.
    """


class DegenerateLabelsError(ValueError):
    """Raised when an operation needs both label classes but got only one."""


class CsvParseError(ValueError):
    """CSV ingestion failure, carrying the 1-based line number.

    Attributes:
        line_number: Line of the offending row (header counts as line 1).
    """

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")
