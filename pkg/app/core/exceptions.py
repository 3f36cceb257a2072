class AlphaModError(Exception):
    """Base class for toolkit errors."""


class ConfigurationError(AlphaModError):
    """A run configuration could not be loaded or is inconsistent."""


class CertificationError(AlphaModError, ValueError):
    """A constructed object failed its numerical certificate."""


class CoveringHoleError(CertificationError):
    """The window denominator vanishes somewhere in the certified region."""


class PlateauOverlapError(AlphaModError, ValueError):
    """Adjoined plateau balls are not pairwise disjoint."""


class SpectralLeakageError(AlphaModError, ValueError):
    """A spectrum carries mass outside the certified region."""


class GridCapacityError(AlphaModError, ValueError):
    """The sampling grid cannot hold the requested frequency content."""

    def __init__(self, message: str, max_feasible: int | None = None):
        super().__init__(message)
        self.max_feasible = max_feasible
