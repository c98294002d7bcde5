class EngineError(RuntimeError):
    """An internal consistency check failed; results cannot be trusted."""


class InputError(ValueError):
    """A caller-supplied descriptor or parameter is invalid."""
