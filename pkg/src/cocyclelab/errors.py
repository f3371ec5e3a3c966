"""Exception types shared across the package."""


class CocycleLabError(Exception):
    """Base class for package errors."""


class CapExceeded(CocycleLabError):
    """A return-time search hit its step cap before finding enough returns."""


class InvariantViolation(CocycleLabError):
    """A structural identity that must hold exactly was violated."""


class AmbiguousBranch(InvariantViolation):
    """A point matched two branches of a locally constant cocycle."""


class NonDiagonal(InvariantViolation):
    """An induced product that should be monomial (diagonal/antidiagonal) is not."""


class ClassSearchTimeout(CocycleLabError):
    """Exact seminorm search exceeded its backtracking budget."""


class Unsupported(CocycleLabError):
    """Requested evaluation lies outside the supported regime."""


class ConfigError(CocycleLabError):
    """Invalid experiment configuration."""
