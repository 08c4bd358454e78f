"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Tensor extents are incompatible with the requested operation."""


class ContractError(ValueError):
    """A caller violated an operation's precondition."""


class DegenerateInputError(ValueError):
    """Input collapses to a case with no defined answer (e.g. zero vector)."""


class GenerationError(RuntimeError):
    """Synthetic scene generation could not satisfy the requested layout."""


class ConfigError(ValueError):
    """Configuration file is malformed or contains unknown keys."""
