"""Exception types shared across the package."""


class RieszError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(RieszError):
    """Operands carry incompatible spatial dimensions."""


class SingularEnergyError(RieszError):
    """Pair energy evaluated on coincident points.

    Raised instead of returning +inf so that optimizers and samplers can
    backtrack on a typed signal.  ``indices`` holds the offending point
    index pairs.
    """

    def __init__(self, indices, message=None):
        self.indices = list(indices)
        if message is None:
            message = f"coincident points at index pairs {self.indices}"
        super().__init__(message)


class DomainError(RieszError):
    """A point lies outside the confinement domain."""


class LatticeError(RieszError):
    """Invalid lattice or lattice-sum request (e.g. divergent exponent)."""


class ConfigError(RieszError):
    """Experiment-config text failed validation.

    Carries every validation failure, not just the first one, as
    ``errors``: a list of (line_number, message) tuples.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        lines = "; ".join(f"line {ln}: {msg}" if ln else msg for ln, msg in self.errors)
        super().__init__(f"{len(self.errors)} config error(s): {lines}")
