class ValidationError(ValueError):
    """Invalid user input: bad parameters, geometry or configuration."""


class GeometryError(ValidationError):
    pass
