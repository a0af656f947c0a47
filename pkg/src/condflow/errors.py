"""Exception types shared across the package.

Every error carries a ``module`` and ``code`` attribute so the CLI can
emit a single machine-parseable line of the form ``error:<module>:<code>``.
"""


class CondflowError(Exception):
    """Base class for all package errors."""

    def __init__(self, message, module="core", code="error"):
        super().__init__(message)
        self.module = module
        self.code = code


class ArgumentError(CondflowError):
    """Invalid argument value or inconsistent shapes."""

    def __init__(self, message, module="core"):
        super().__init__(message, module=module, code="argument")


class ParseError(CondflowError):
    """Malformed file content (CSV fields, config lines)."""

    def __init__(self, message, module="core"):
        super().__init__(message, module=module, code="parse")


class NumericalError(CondflowError):
    """Ill-conditioned or singular systems, degenerate statistics."""

    def __init__(self, message, module="core", code="numerical"):
        super().__init__(message, module=module, code=code)
