"""Exception types raised across the toolkit."""


class BinsegError(Exception):
    """Base class for all toolkit errors."""


# --- tensor / image file errors ---------------------------------------------

class BadMagic(BinsegError):
    """File does not start with the expected magic bytes."""


class UnsupportedVersion(BinsegError):
    """Container version is not one this reader understands."""


class DtypeUnknown(BinsegError):
    """Header carries a dtype code outside the supported set."""


class TruncatedPayload(BinsegError):
    """Payload is shorter than the header dimensions imply."""


class TrailingData(BinsegError):
    """File continues past the end of the declared payload."""


class NonFiniteFloat(BinsegError):
    """A float tensor contains NaN or Inf after reading."""


class IoFailure(BinsegError):
    """Underlying OS write/read failed."""


class UnsupportedFormat(BinsegError):
    """Image file is not a binary PPM/PGM with maxval 255."""


class CorruptHeader(BinsegError):
    """Header fields are malformed or out of range."""


class TruncatedPixelData(BinsegError):
    """Image payload ends before width*height pixels."""


class UnsupportedChannels(BinsegError):
    """Channel count has no encoding in the target format."""


# --- segmentation errors -----------------------------------------------------

class WrongChannelCount(BinsegError):
    """Operation requires a specific number of channels."""


class KTooLarge(BinsegError):
    """Requested more superpixels than there are pixels."""


class EmptyImage(BinsegError):
    """Image has zero pixels."""


# --- hashing errors ----------------------------------------------------------

class RankDeficient(BinsegError):
    """Training data has fewer nonzero covariance eigenvalues than requested bits."""


class BadShape(BinsegError):
    """Matrix dimensions violate the operation's preconditions."""


class DimMismatch(BinsegError):
    """Vector/tensor dimensionality does not match the model or mask."""


class TooManyBits(BinsegError):
    """Code length exceeds what the visualization can address."""


class LengthMismatch(BinsegError):
    """Binary codes of different lengths were compared."""


class EmptyDataset(BinsegError):
    """Evaluation was asked to aggregate over zero images."""
