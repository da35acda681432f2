"""Exception types shared across the package."""


class InputError(ValueError):
    """Caller supplied malformed or out-of-range input."""


class InvariantError(RuntimeError):
    """An internal contract was breached (allocator, cache bookkeeping, report checks)."""
