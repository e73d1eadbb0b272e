class PhotonicError(ValueError):
    """Base class for every error raised by the simulator."""


class InvalidOccupation(PhotonicError):
    """An occupation vector holds a negative or oversized entry."""


class DimensionMismatch(PhotonicError):
    """Two operands disagree on their number of modes or lengths."""


class ZeroNorm(PhotonicError):
    """A state with zero norm cannot be normalized."""


class MixedSector(PhotonicError):
    """A state spans several total photon numbers."""


class NotUnitary(PhotonicError):
    """A matrix failed the unitarity check."""


class InvalidModeSet(PhotonicError):
    """Mode indices are repeated or out of range."""


class InvalidDimension(PhotonicError):
    """A requested size is zero, negative or not square."""


class NotSquare(PhotonicError):
    """A matrix argument is not square."""


class TooLarge(PhotonicError):
    """The requested computation exceeds a configured size limit."""


class NormTooLarge(PhotonicError):
    """Operator norm above one; the additive error bound does not hold."""


class NotNormalized(PhotonicError):
    """A state whose norm must be 1 is not normalized."""


class ImpossibleOutcome(PhotonicError):
    """The requested detection outcome has (numerically) zero probability."""


class InvalidConfiguration(PhotonicError):
    """A command parameter or party schedule is out of range."""


class DerivationFailed(PhotonicError):
    """The CHSH rotation search stopped short of the Tsirelson bound."""


class DecompositionMismatch(PhotonicError):
    """No Bell-pair ordering and sign convention reproduces the symmetric state."""


class InvalidPovm(PhotonicError):
    """POVM elements are not Hermitian PSD or do not sum to identity."""


class InvalidFile(PhotonicError):
    """An input file failed its JSON schema."""
