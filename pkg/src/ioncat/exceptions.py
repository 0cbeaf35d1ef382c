"""Exception types raised by ioncat."""


class ParameterError(ValueError):
    """Physical or numerical parameters outside their admissible range."""


class DimensionMismatchError(ValueError):
    """Two states or operators live in spaces of different size."""


class DegenerateStateError(ValueError):
    """A (near-)zero vector was asked to be normalized or measured."""


class NoPhotonError(DegenerateStateError):
    """The one-photon sector is empty, so there is nothing to detect."""


class IntegrationError(RuntimeError):
    """The numerical integrator could not complete."""
