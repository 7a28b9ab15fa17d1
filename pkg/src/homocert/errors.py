"""Exception types shared across the package."""


class UsageError(ValueError):
    """Invalid parameters or violated preconditions (CLI exit status 2)."""


class CapExceeded(RuntimeError):
    """A configured size/radius/budget cap was exceeded (CLI exit status 3).

    Raised instead of silently truncating; carries a short description of
    which cap tripped.
    """


class RefutedError(RuntimeError):
    """An exhaustive verification found a counterexample.

    This signals a broken build (or a genuinely false instance), never a
    recoverable condition; the offending witness is in the message.
    """
