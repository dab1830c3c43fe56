"""Exception types shared across the package."""


class DatasetError(Exception):
    """A dataset file is missing, unreadable, or structurally broken."""


class ValidationError(DatasetError):
    """Loaded data violates an invariant (unknown class, bad span, ...)."""


class ConfigurationError(Exception):
    """A checkpoint, encoder, or run configuration cannot be resolved."""


class BackendError(Exception):
    """A model backend was asked to do something it does not support."""


class GenerationError(BackendError):
    """Generation failed for one input; carries the failing input index."""

    def __init__(self, index: int, message: str):
        super().__init__(f"generation failed for input {index}: {message}")
        self.index = index


class UndefinedCorrelationError(ValueError):
    """Pearson correlation is undefined for the given inputs."""
