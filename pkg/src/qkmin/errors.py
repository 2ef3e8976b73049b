"""Exception types shared across the package."""


class CapacityError(ValueError):
    """Requested register is larger than the backend can hold."""


class SimulationError(RuntimeError):
    """A simulated state failed an internal consistency check."""


class PartialResultError(RuntimeError):
    """An algorithm ran out of query budget before finishing.

    ``found`` carries whatever the algorithm had collected so far and
    ``phase`` names the stage that gave up.
    """

    def __init__(self, message, found=(), phase=None, queries=None):
        super().__init__(message)
        self.found = set(found)
        self.phase = phase
        self.queries = queries
