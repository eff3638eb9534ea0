"""Exception hierarchy shared by the engines, protocols and CLI."""


class HybridGKPError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateState(HybridGKPError):
    """A requested state has zero norm (e.g. an odd cat at zero amplitude)."""


class InvalidMode(HybridGKPError):
    """A mode index is out of range for the state it is applied to."""


class InvalidTransmittance(HybridGKPError):
    """Beam-splitter transmittance outside the open interval (0, 1)."""


class ModeMismatch(HybridGKPError):
    """Two states (or two modes) have incompatible shapes."""


class CutoffTooSmall(HybridGKPError):
    """Fock truncation lost more norm than the caller allowed."""


class NotSingleMode(HybridGKPError):
    """An operation that needs a single-mode state received something else."""


class ZeroDensity(HybridGKPError):
    """The post-selected outcome has (numerically) vanishing probability density."""


class WindowExceedsDomain(HybridGKPError):
    """Acceptance window wider than the integration domain."""


class UnsupportedOperation(HybridGKPError):
    """The chosen engine cannot represent the requested circuit element."""


class ConvergenceError(HybridGKPError):
    """A numerical procedure failed to reach its tolerance."""


class EngineDisagreement(HybridGKPError):
    """The coherent and Fock engines disagree beyond tolerance."""
