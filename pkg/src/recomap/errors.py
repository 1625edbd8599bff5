"""Exception types shared across the package."""


class MapError(Exception):
    """Base class for all recomap errors."""


class ParseError(MapError):
    """Input bytes do not parse; carries a location string."""

    def __init__(self, message, location=""):
        super().__init__(message if not location else f"{message} (at {location})")
        self.location = location


class SchemaError(MapError):
    """Parsed input violates a model invariant; names the invariant."""

    def __init__(self, invariant, detail=""):
        super().__init__(f"{invariant}: {detail}" if detail else invariant)
        self.invariant = invariant


class PointNotOnBoundary(MapError):
    pass


class NotAdjacent(MapError):
    pass


class NotConnected(MapError):
    pass


class EpsilonTooLarge(MapError):
    """Requested thickening width exceeds the feasibility bound."""

    def __init__(self, requested, bound):
        super().__init__(f"epsilon {requested} exceeds feasibility bound {bound}")
        self.requested = requested
        self.bound = bound


class NonRectilinearInExactMode(MapError):
    pass


class NotInPostGravityForm(MapError):
    pass


class NotAreaCompatible(MapError):
    pass


class AmbiguousMatching(MapError):
    pass


class LevelOutOfRange(MapError):
    pass


class LevelTooSmall(MapError):
    pass


class InternalInvariantError(MapError):
    """An internal pipeline invariant failed; carries diagnostics."""
