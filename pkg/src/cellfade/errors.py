"""Exception types raised across the package.

Numerical trouble is always raised, never papered over: a particle driven past
saturation or a protocol that stops converging is a modelling error the caller
needs to see.
"""


class CellfadeError(Exception):
    """Base class for all package errors."""


class ConfigError(CellfadeError):
    """Malformed or physically inconsistent configuration input."""


class SaturationError(CellfadeError):
    """Particle surface concentration left the open interval (0, c_smax)."""


class KineticsSingularError(CellfadeError):
    """Exchange current density hit zero so overpotential is undefined."""


class CellDeadError(CellfadeError):
    """Requested operation is impossible for the current cell state
    (e.g. voltage window empty after heavy capacity loss)."""


class ProtocolStallError(CellfadeError):
    """A protocol step failed to reach its termination condition."""


class EstimationFailedError(CellfadeError):
    """Least-squares health extraction did not converge to a usable fit."""


class InfeasibleError(CellfadeError):
    """No degradation state is consistent with the supplied measurements."""


class AmbiguousRootsError(CellfadeError):
    """Expansion-based inversion found two physically admissible states.

    Both candidates ride along on the exception so the caller can inspect
    them or fall back to the set-valued route.
    """

    def __init__(self, msg, candidates):
        super().__init__(msg)
        self.candidates = candidates
