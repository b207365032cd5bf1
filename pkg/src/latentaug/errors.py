"""Exception types shared across the toolkit."""


class ShapeError(ValueError):
    """Operands have incompatible shapes."""


class VocabularyError(ValueError):
    """A word or id is not covered by the vocabulary in the requested mode."""


class ConfigError(ValueError):
    """Invalid configuration value, file, or command usage."""


class CheckpointError(ValueError):
    """Checkpoint file is missing required structure or is corrupt."""


class TrainingDiverged(RuntimeError):
    """Training produced a non-finite loss."""
