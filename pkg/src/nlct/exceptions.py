"""Exception types shared across the package."""


class CapacityError(ValueError):
    """A requested allocation exceeds the configured memory budget."""


class GeometryError(ValueError):
    """An acquisition geometry is physically invalid (e.g. source inside volume)."""


class DivergenceError(RuntimeError):
    """Optimization produced a non-finite loss.

    Attributes
    ----------
    iteration : int
        Iteration index at which the non-finite value appeared.
    """

    def __init__(self, message, iteration):
        super().__init__(message)
        self.iteration = iteration
