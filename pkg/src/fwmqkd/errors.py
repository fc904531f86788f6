"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A physical or numerical parameter is outside its valid domain."""


class DegenerateInputError(ValueError):
    """The input carries no usable signal (e.g. zero photons everywhere)."""


class DegenerateFieldError(DegenerateInputError):
    """Both field amplitudes vanish, so polarization is undefined."""


class MessageEncodingError(ValueError):
    """The message cannot be represented in 7-bit ASCII."""


class ConfigError(ValueError):
    """A config file or CLI option is malformed or inconsistent."""


class SchemaError(ConfigError):
    """An input data file does not match the documented column schema."""
