"""Exception types raised by the library.

Every failure mode that callers are expected to handle gets its own class;
all of them derive from FloblochError so coarse-grained handling stays easy.
"""


class FloblochError(Exception):
    """Base class for all library errors."""


class DomainError(FloblochError):
    """Input outside the mathematical domain of an operation (e.g. E0 <= 0)."""


class ValidityError(FloblochError):
    """A validity condition of an approximation is violated.

    Carries the violated bound in ``bound`` when applicable.
    """

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


class ShellError(FloblochError):
    """Phase-space point does not lie on the required energy shell."""

    def __init__(self, message, mismatch=None):
        super().__init__(message)
        self.mismatch = mismatch


class ParameterError(FloblochError):
    """A numeric parameter is out of its supported range."""


class ResonanceError(FloblochError):
    """Drive frequency is not an integer multiple of the orbit frequency."""


class DegenerateLatticeError(FloblochError):
    """The resonant Fourier coefficient vanishes; no phase lattice forms."""


class ResolutionError(FloblochError):
    """Requested accuracy cannot be reached at the given discretization."""


class ConfigurationError(FloblochError):
    """Incompatible combination of well, instrument, or mode."""


class RepresentabilityError(FloblochError):
    """State cannot be realized on the 2*pi circle (non-integer quasi-momentum)."""


class NumericsError(FloblochError):
    """An underlying numerical routine failed to converge."""


class StabilityError(FloblochError):
    """Propagation lost unitarity beyond tolerance; reduce the time step."""


class CoverageError(FloblochError):
    """Time series does not span enough slow periods for the request."""


class DetectionError(FloblochError):
    """No statistically significant periodicity found in the series."""


class PreparationError(FloblochError):
    """Initial wavepacket violates its preparation contract."""


class SymmetryError(FloblochError):
    """Odd-extension symmetry broken beyond tolerance during evolution."""


class KickError(FloblochError):
    """Kick schedule incompatible with the grid or time step."""


class DesignError(FloblochError):
    """Requested well design violates its geometric constraints."""


class DimensionError(FloblochError):
    """Array argument has a degenerate or unsupported shape."""


class ConfigParseError(FloblochError):
    """Scenario document is structurally invalid. ``path`` is a JSON pointer."""

    def __init__(self, message, path=""):
        super().__init__(f"{message} (at {path or '/'})")
        self.path = path


class ConfigValidationError(FloblochError):
    """Scenario document is well-formed but violates a physics constraint."""

    def __init__(self, message, constraint=None):
        super().__init__(message)
        self.constraint = constraint
