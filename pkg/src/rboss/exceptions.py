"""Exception hierarchy for the rboss package."""


class RbossError(Exception):
    """Base class for every error raised by this package."""


class FormatError(RbossError, ValueError):
    """Malformed dataset text."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class StratificationError(RbossError, ValueError):
    pass


class PolicyError(RbossError, ValueError):
    pass


class ParameterError(RbossError, ValueError):
    pass


class EstimateError(RbossError, ValueError):
    pass


class BuildError(RbossError, RuntimeError):
    pass


class ConfigError(RbossError, ValueError):
    pass


class SpecError(RbossError, ValueError):
    pass


class CheckpointError(RbossError, IOError):
    """Checkpoint could not be written or read back intact."""


class CheckpointNotFoundError(CheckpointError, FileNotFoundError):
    pass


class VersionError(CheckpointError):
    def __init__(self, found, supported):
        self.found = found
        self.supported = supported
        super().__init__(
            f"checkpoint format version {found} is not supported "
            f"(this build reads version {supported})"
        )


class DatasetMismatchError(CheckpointError):
    pass
