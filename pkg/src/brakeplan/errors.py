"""Exception hierarchy shared by the planner modules and the CLI."""


class BrakePlanError(Exception):
    """Base class for all planner errors."""


class ParameterError(BrakePlanError, ValueError):
    """An input value violates a documented precondition."""


class ConfigurationError(BrakePlanError):
    """Field and planning parameters are mutually inconsistent."""


class FieldFormatError(BrakePlanError):
    """A penalty-field file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class OutOfRegionError(BrakePlanError, ValueError):
    """No failure time maps onto the requested (t, s) point."""


class SingularityError(BrakePlanError, ValueError):
    """A substitution density was requested at a singular point."""


class InfeasibleCapError(ConfigurationError):
    """The braking-distance cap removes every candidate deceleration."""
