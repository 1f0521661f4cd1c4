class DomainError(ValueError):
    """Raised when an input lies outside the domain of an operation."""


class NotSplitError(DomainError):
    """Raised when a binary form has no complete set of rational roots.

    The degrees of the irreducible factors over Q are kept in ``degrees``.
    """

    def __init__(self, degrees: list[int]):
        self.degrees = sorted(degrees)
        super().__init__(
            f"Form does not split over Q: irreducible factor degrees {self.degrees}"
        )


class CapacityError(RuntimeError):
    """Raised when an exhaustive computation would exceed its capacity guard."""

    def __init__(self, what: str, size: int, limit: int):
        self.size = size
        self.limit = limit
        super().__init__(
            f"{what} needs {size} candidates, above the capacity limit of {limit}"
        )
