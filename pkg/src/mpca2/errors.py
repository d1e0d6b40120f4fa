class ValidationError(ValueError):
    """Input violates a shape, range or structural precondition."""


class NumericalError(ArithmeticError):
    """A numerical routine failed, e.g. the eigensolver hit its sweep cap."""
