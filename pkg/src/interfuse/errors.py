"""Exception types shared across the engine."""


class InterfuseError(Exception):
    """Base class for all engine errors."""


class ValidationError(InterfuseError, ValueError):
    """External data violated a format rule or an invariant.

    Raised by loaders and by constructors that check invariants; the CLI
    maps this to exit code 2. Messages name the offending file, line, or
    identifier wherever one exists.
    """
