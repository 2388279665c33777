"""Exception hierarchy shared by all harmrank modules."""


class HarmRankError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(HarmRankError):
    """Input data, configuration, or argument violates a contract."""


class SchemaError(ValidationError):
    """An input file does not match the declared schema."""


class EmptyInputError(ValidationError):
    """An input source contains no usable rows or records."""


class ComputationError(HarmRankError):
    """A computation failed on inputs that passed validation."""
