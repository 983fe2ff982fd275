"""Exception types shared across the package."""


class DecseqError(Exception):
    """Base class for everything this package raises on purpose."""


class ProblemSpecError(DecseqError):
    """A problem description failed validation.

    Carries the offending field path so CLI users can find the mistake.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ImpossibleUpdateError(DecseqError):
    """A Bayes update was requested on a zero-probability event."""


class UnreachableBranchError(DecseqError):
    """A state restriction removed all probability mass."""


class StructureViolation(DecseqError):
    """An action labelling does not have the required threshold shape."""


class CapacityError(DecseqError):
    """A brute-force enumeration would exceed the configured cap."""

    def __init__(self, count, cap):
        self.count = count
        self.cap = cap
        super().__init__(f"enumeration size {count:.3g} exceeds cap {cap:.3g}")


class CertificationError(DecseqError):
    """A requested accuracy could not be certified within configured limits.

    ``best`` holds the best certificate pair that was achieved.
    """

    def __init__(self, message, best=None):
        self.best = best
        super().__init__(message)
