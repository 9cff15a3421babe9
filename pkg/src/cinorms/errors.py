"""Exception hierarchy shared by all pipeline stages."""


class InputError(ValueError):
    """Raised for malformed or inconsistent user-supplied input."""


class ParseError(InputError):
    pass


class ValidationError(InputError):
    pass
