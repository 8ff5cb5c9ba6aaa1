"""Exception types raised by ptgame."""


class ScenarioError(ValueError):
    """Invalid scenario data. ``field`` names the offending entry when known."""

    def __init__(self, message, field=None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class DomainError(ValueError):
    """A value function was evaluated outside its valid domain."""

    def __init__(self, message, profile=None):
        super().__init__(message)
        self.profile = profile


class InconsistentPriceError(ValueError):
    """The price vector lies outside the consistent set, so no EUT equilibrium exists."""
