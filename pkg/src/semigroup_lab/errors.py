"""Exception types shared across the lab."""


class GridMismatchError(ValueError):
    """Two objects live on different spatial grids."""


class NotPositiveError(ValueError):
    """An operation that requires positive input received a signed one."""


class DomainError(ValueError):
    """Input lies outside the domain of the requested operator."""


class RefusedError(ValueError):
    """A series is refused because its convergence ratio is not below one."""


class ConvergenceError(RuntimeError):
    """A series did not reach its tail tolerance."""
