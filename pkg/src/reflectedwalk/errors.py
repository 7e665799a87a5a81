"""Exception types shared across the package."""


class ReflectedWalkError(Exception):
    """Base class for every package-specific error."""


class EmptySupport(ReflectedWalkError):
    """Step table has no positive-weight atoms."""


class NegativeWeight(ReflectedWalkError):
    """Step table contains a negative weight."""


class MassNotNormalizable(ReflectedWalkError):
    """Step weights sum too far from 1 to be silently renormalized."""


class HorizonTooLarge(ReflectedWalkError):
    """A lattice recursion would exceed the configured memory/work budget."""


class SlowConvergence(ReflectedWalkError):
    """Mass accumulation did not reach the requested deficit within the horizon."""


class ImpossibleBridge(ReflectedWalkError):
    """Bridge conditioning event has probability zero."""


class TruncationTooSevere(ReflectedWalkError):
    """Kernel row deficits exceed what downstream spectral work tolerates."""


class NoConvergence(ReflectedWalkError):
    """An iterative eigen computation hit its iteration cap."""


class WindowMismatch(ReflectedWalkError):
    """Operator sequences were combined over incompatible truncation windows."""


class InvariantViolation(ReflectedWalkError):
    """A hard pathwise invariant failed; indicates an implementation bug."""


class QuadratureFailure(ReflectedWalkError):
    """Adaptive quadrature could not certify the requested tolerance."""


class ConfigError(ReflectedWalkError):
    """Run configuration is missing, unreadable, or inconsistent."""
