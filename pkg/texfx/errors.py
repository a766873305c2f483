"""Error types for texfx.

Every error is a click exception so library failures surface on the command
line as a one-line diagnostic with the documented exit code.
"""

import click

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_DEGENERATE = 3


class ConfigError(click.UsageError):
    """Invalid flag value or parameter override."""

    exit_code = EXIT_USAGE


class ImageIOError(click.ClickException):
    """Reading or writing an image or report failed."""

    exit_code = EXIT_IO

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{message}: {path}" if path is not None else message)


class ImageNotFoundError(ImageIOError, FileNotFoundError):
    def __init__(self, path):
        super().__init__("Image not found", path)


class ImageDecodeError(ImageIOError):
    def __init__(self, path, reason=None):
        message = "Cannot decode image" if reason is None else f"Cannot decode image ({reason})"
        super().__init__(message, path)


class UnsupportedBitDepthError(ImageIOError):
    def __init__(self, path, mode):
        self.mode = mode
        super().__init__(f"Unsupported bit depth or mode '{mode}', expected 8-bit gray or RGB", path)


class DegenerateInputError(click.ClickException):
    """The input is valid on disk but cannot drive the analysis or synthesis."""

    exit_code = EXIT_DEGENERATE


class DegenerateMaskError(DegenerateInputError):
    pass


class EmptyPointSetError(DegenerateInputError):
    pass


class EmptyHistogramError(DegenerateInputError):
    pass


class EmptyPartitionError(DegenerateInputError):
    pass


class SizeMismatchError(DegenerateInputError):
    pass


class PatchTooLargeError(DegenerateInputError):
    pass


class ChannelMismatchError(DegenerateInputError, ValueError):
    pass
