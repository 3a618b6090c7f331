"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: InputError -> 2, ConfigError -> 3,
ConsistencyError -> 4.
"""


class LdiPhotoError(Exception):
    """Base class for all package errors."""


class InputError(LdiPhotoError):
    """Bad user-supplied data (dimensions, ranges, unreadable files)."""


class ConfigError(LdiPhotoError):
    """Invalid configuration value or config file."""


class ConsistencyError(LdiPhotoError):
    """An internal structural invariant was violated."""


class BackendError(LdiPhotoError):
    """An inpainting backend failed; carries the stage name."""

    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
