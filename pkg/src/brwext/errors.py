"""Exception types shared across the package."""


class InvalidLaw(ValueError):
    """An offspring law or rate vector failed validation."""


class TruncationIncomplete(LookupError):
    """A vertex outside the truncation was queried with no boundary policy."""


class ReducibleModel(ValueError):
    """A finite model is not irreducible."""


class PreconditionError(ValueError):
    """Inputs violate a stated precondition."""
