"""Exception types shared across the package."""


class RankattrError(Exception):
    """Base class for all rankattr errors."""


class ValidationError(RankattrError):
    """Bad user input: malformed data, config, flags, or selectors."""


class SchemaError(ValidationError):
    """An on-disk document does not match the expected schema."""


class ComputationError(RankattrError):
    """A computation produced an unusable result (e.g. non-finite score)."""
